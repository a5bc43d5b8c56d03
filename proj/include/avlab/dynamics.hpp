#pragma once

// Kinematic bicycle model with additive process noise, a single range-bearing
// landmark sensor, and the actuator false-data-injection channel.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "avlab/angles.hpp"
#include "avlab/errors.hpp"

namespace avlab {

struct VehicleState {
    double x = 0.0;     // m
    double y = 0.0;     // m
    double theta = 0.0; // rad, (-pi, pi]

    Eigen::Vector3d vec() const { return {x, y, theta}; }
    static VehicleState from(const Eigen::Vector3d& v) { return {v(0), v(1), wrap_angle(v(2))}; }
    bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(theta); }
};

struct ControlInput {
    double v = 0.0;   // m/s
    double phi = 0.0; // rad
};

// Injected false data d_k. Shares the shape of ControlInput.
struct AttackSignal {
    double v_d = 0.0;
    double phi_d = 0.0;
};

struct Measurement {
    double range = 0.0;   // m
    double bearing = 0.0; // rad, (-pi, pi]
};

struct Position {
    double x = 0.0;
    double y = 0.0;
};

struct ActuatorLimits {
    double v_max = 2.0;
    double phi_max = kPi / 4.0;

    ControlInput clamp(ControlInput u) const {
        return {std::clamp(u.v, 0.0, v_max), std::clamp(u.phi, -phi_max, phi_max)};
    }

    void validate() const {
        if (!(v_max > 0.0) || !std::isfinite(v_max)) throw ConfigError("vehicle.v_max must be positive");
        if (!(phi_max > 0.0) || !(phi_max < kPi / 2.0))
            throw ConfigError("vehicle.phi_max must lie in (0, pi/2)");
    }
};

struct VehicleParams {
    double dt = 0.1;        // s
    double wheelbase = 1.0; // m
    ActuatorLimits limits;
    Position landmark{0.0, 0.0};
    double epsilon_range = 1e-6;

    void validate() const {
        if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("vehicle.dt must be positive");
        if (!(wheelbase > 0.0) || !std::isfinite(wheelbase))
            throw ConfigError("vehicle.wheelbase must be positive");
        if (!(epsilon_range > 0.0)) throw ConfigError("vehicle.epsilon_range must be positive");
        if (!std::isfinite(landmark.x) || !std::isfinite(landmark.y))
            throw ConfigError("vehicle.landmark must be finite");
        limits.validate();
    }
};

namespace detail {

template <int N>
void check_covariance(const Eigen::Matrix<double, N, N>& m, bool strictly_positive, const std::string& name) {
    if (!m.allFinite()) throw ConfigError(name + " has non-finite entries");
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12) throw ConfigError(name + " is not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, N, N>> es(m);
    const double lo = es.eigenvalues().minCoeff();
    if (strictly_positive ? !(lo > 0.0) : lo < 0.0)
        throw ConfigError(name + (strictly_positive ? " must be positive definite" : " must be positive semidefinite"));
}

// Symmetric square root factor A with A * A^T = m; handles singular PSD input.
template <int N>
Eigen::Matrix<double, N, N> psd_factor(const Eigen::Matrix<double, N, N>& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, N, N>> es(m);
    const Eigen::Matrix<double, N, 1> root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * root.asDiagonal();
}

} // namespace detail

struct NoiseModel {
    Eigen::Matrix3d process = Eigen::Vector3d(2.5e-5, 2.5e-5, 1e-5).asDiagonal();
    Eigen::Matrix2d measurement = Eigen::Vector2d(1e-2, 2.5e-3).asDiagonal();
    std::uint64_t seed = 0;

    static NoiseModel zero() {
        NoiseModel n;
        n.process.setZero();
        // Positive definite is required by the EKF; tiny but nonzero.
        n.measurement = Eigen::Matrix2d::Identity() * 1e-12;
        return n;
    }

    bool process_is_zero() const { return process.isZero(0.0); }

    void validate() const {
        detail::check_covariance<3>(process, false, "noise.process");
        detail::check_covariance<2>(measurement, true, "noise.measurement");
    }
};

// Gaussian draws for w_k and q_k. One instance per environment; not shared.
class NoiseSource {
public:
    NoiseSource() : NoiseSource(NoiseModel{}, 0) {}
    NoiseSource(const NoiseModel& model, std::uint64_t seed)
        : process_factor_(detail::psd_factor<3>(model.process)),
          measurement_factor_(detail::psd_factor<2>(model.measurement)),
          measurement_enabled_(!model.measurement.isZero(1e-9)),
          process_enabled_(!model.process.isZero(0.0)),
          rng_(seed) {}

    void reseed(std::uint64_t seed) {
        rng_.seed(seed);
        normal_.reset();
    }

    Eigen::Vector3d process() {
        if (!process_enabled_) return Eigen::Vector3d::Zero();
        Eigen::Vector3d e{normal_(rng_), normal_(rng_), normal_(rng_)};
        return process_factor_ * e;
    }

    Eigen::Vector2d measurement() {
        if (!measurement_enabled_) return Eigen::Vector2d::Zero();
        Eigen::Vector2d e{normal_(rng_), normal_(rng_)};
        return measurement_factor_ * e;
    }

private:
    Eigen::Matrix3d process_factor_;
    Eigen::Matrix2d measurement_factor_;
    bool measurement_enabled_;
    bool process_enabled_;
    std::mt19937_64 rng_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

// Actuator command actually executed by the plant: clamp(u + d).
inline ControlInput effective_input(ControlInput u, AttackSignal d, const ActuatorLimits& limits) {
    return limits.clamp({u.v + d.v_d, u.phi + d.phi_d});
}

// Forward-Euler step x_{k+1} = x_k + dt * f(x_k, clamp(u + d)) + w_k.
inline VehicleState step(const VehicleState& s, ControlInput u, AttackSignal d, const VehicleParams& p,
                         const Eigen::Vector3d& w = Eigen::Vector3d::Zero()) {
    if (!(p.dt > 0.0)) throw ConfigError("step: dt must be positive");
    if (!(p.wheelbase > 0.0)) throw ConfigError("step: wheelbase must be positive");
    if (!s.finite()) throw FaultError("step: non-finite vehicle state");
    const ControlInput e = effective_input(u, d, p.limits);
    VehicleState n;
    n.x = s.x + p.dt * e.v * std::cos(s.theta) + w(0);
    n.y = s.y + p.dt * e.v * std::sin(s.theta) + w(1);
    n.theta = wrap_angle(s.theta + p.dt * (e.v / p.wheelbase) * std::tan(e.phi) + w(2));
    if (!n.finite()) throw FaultError("step: non-finite result");
    return n;
}

inline Measurement measure(const VehicleState& s, Position landmark, const Eigen::Vector2d& q = Eigen::Vector2d::Zero(),
                           double epsilon_range = 1e-6) {
    const double dx = landmark.x - s.x;
    const double dy = landmark.y - s.y;
    const double r = std::hypot(dx, dy);
    if (!(r > epsilon_range)) throw GeometryError("measure: vehicle coincides with landmark");
    return {std::max(0.0, r + q(0)), wrap_angle(std::atan2(dy, dx) - s.theta + q(1))};
}

// d(step)/d(state) with u_effective already clamped.
inline Eigen::Matrix3d jacobian_f_state(const VehicleState& s, ControlInput u_effective, double dt) {
    Eigen::Matrix3d f = Eigen::Matrix3d::Identity();
    f(0, 2) = -dt * u_effective.v * std::sin(s.theta);
    f(1, 2) = dt * u_effective.v * std::cos(s.theta);
    return f;
}

inline Eigen::Matrix<double, 2, 3> jacobian_g_state(const VehicleState& s, Position landmark,
                                                    double epsilon_range = 1e-6) {
    const double dx = landmark.x - s.x;
    const double dy = landmark.y - s.y;
    const double r2 = dx * dx + dy * dy;
    const double r = std::sqrt(r2);
    if (!(r > epsilon_range)) throw GeometryError("jacobian_g_state: vehicle coincides with landmark");
    Eigen::Matrix<double, 2, 3> h;
    h << -dx / r, -dy / r, 0.0,
          dy / r2, -dx / r2, -1.0;
    return h;
}

} // namespace avlab
