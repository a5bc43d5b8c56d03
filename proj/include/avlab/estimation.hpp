#pragma once

// Extended Kalman filter over VehicleState and the posterior-minus-prior residue
// consumed by the chi-square detector.

#include <cmath>

#include <Eigen/Dense>

#include "avlab/angles.hpp"
#include "avlab/dynamics.hpp"
#include "avlab/errors.hpp"

namespace avlab {

struct BeliefState {
    VehicleState mean;
    Eigen::Matrix3d cov = Eigen::Matrix3d::Identity() * 0.01;

    static BeliefState initial(const VehicleState& truth, double variance = 0.01) {
        return {truth, Eigen::Matrix3d::Identity() * variance};
    }
};

struct Residue {
    Eigen::Vector3d r = Eigen::Vector3d::Zero();
};

// The filter only knows the commanded input; any injected d_k is invisible here.
inline BeliefState predict(const BeliefState& b, ControlInput u_commanded, const VehicleParams& p,
                           const Eigen::Matrix3d& process_cov) {
    const ControlInput u = p.limits.clamp(u_commanded);
    BeliefState out;
    out.mean = step(b.mean, u, {}, p);
    const Eigen::Matrix3d f = jacobian_f_state(b.mean, u, p.dt);
    out.cov = f * b.cov * f.transpose() + process_cov;
    out.cov = 0.5 * (out.cov + out.cov.transpose());
    return out;
}

struct UpdateResult {
    BeliefState posterior;
    Eigen::Vector2d innovation = Eigen::Vector2d::Zero();
    Eigen::Matrix2d innovation_cov = Eigen::Matrix2d::Identity();
    Eigen::Matrix<double, 3, 2> gain = Eigen::Matrix<double, 3, 2>::Zero();

    // Covariance induced on the residue K * nu: K S K^T. Rank 2 by construction.
    Eigen::Matrix3d residue_cov() const { return gain * innovation_cov * gain.transpose(); }
};

inline constexpr double kMaxInnovationCondition = 1e12;

inline UpdateResult update(const BeliefState& pred, const Measurement& z, Position landmark,
                           const Eigen::Matrix2d& measurement_cov, double epsilon_range = 1e-6) {
    const Measurement expected = measure(pred.mean, landmark, Eigen::Vector2d::Zero(), epsilon_range);
    const Eigen::Matrix<double, 2, 3> h = jacobian_g_state(pred.mean, landmark, epsilon_range);

    UpdateResult out;
    out.innovation = {z.range - expected.range, wrap_angle(z.bearing - expected.bearing)};
    out.innovation_cov = h * pred.cov * h.transpose() + measurement_cov;
    out.innovation_cov = 0.5 * (out.innovation_cov + out.innovation_cov.transpose());

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(out.innovation_cov, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues()(0);
    const double hi = es.eigenvalues()(1);
    if (!(lo > 0.0) || hi / lo > kMaxInnovationCondition || !out.innovation_cov.allFinite())
        throw FaultError("ekf update: innovation covariance is not invertible (filter divergence)");

    out.gain = pred.cov * h.transpose() * out.innovation_cov.inverse();
    const Eigen::Vector3d corrected = pred.mean.vec() + out.gain * out.innovation;
    out.posterior.mean = VehicleState::from(corrected);
    const Eigen::Matrix3d cov = (Eigen::Matrix3d::Identity() - out.gain * h) * pred.cov;
    out.posterior.cov = 0.5 * (cov + cov.transpose());
    if (!out.posterior.mean.finite() || !out.posterior.cov.allFinite())
        throw FaultError("ekf update: non-finite posterior");
    return out;
}

inline Residue residue(const VehicleState& posterior_mean, const VehicleState& prior_mean) {
    return {Eigen::Vector3d(posterior_mean.x - prior_mean.x, posterior_mean.y - prior_mean.y,
                            wrap_angle(posterior_mean.theta - prior_mean.theta))};
}

} // namespace avlab
