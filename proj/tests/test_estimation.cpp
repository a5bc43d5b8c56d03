#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "avlab/environment.hpp"
#include "avlab/estimation.hpp"

using namespace avlab;

TEST(Predict, DegenerateZeroCovariance) {
    BeliefState b{{1, 2, 0.3}, Eigen::Matrix3d::Zero()};
    const BeliefState out = predict(b, {1.0, 0.2}, {}, Eigen::Matrix3d::Zero());
    EXPECT_TRUE(out.cov.isZero(0.0));
}

TEST(Predict, StationaryAddsProcessNoise) {
    Eigen::Matrix3d p;
    p << 0.2, 0.01, 0.0, 0.01, 0.3, 0.02, 0.0, 0.02, 0.1;
    const Eigen::Matrix3d q = Eigen::Vector3d(1e-3, 2e-3, 3e-3).asDiagonal();
    const BeliefState out = predict({{1, 2, 0.3}, p}, {0.0, 0.4}, {}, q);
    EXPECT_LT((out.cov - (p + q)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Predict, MeanFollowsDynamics) {
    const VehicleParams params;
    const VehicleState s{1, -2, 2.5};
    const BeliefState out = predict({s, Eigen::Matrix3d::Identity()}, {1.3, -0.2}, params, Eigen::Matrix3d::Zero());
    const VehicleState ref = step(s, {1.3, -0.2}, {}, params);
    EXPECT_EQ(out.mean.x, ref.x);
    EXPECT_EQ(out.mean.y, ref.y);
    EXPECT_EQ(out.mean.theta, ref.theta);
}

TEST(Update, ZeroInnovationKeepsMean) {
    const BeliefState pred{{2, 1, 0.4}, Eigen::Matrix3d::Identity() * 0.05};
    const Position lm{0, 0};
    const UpdateResult u = update(pred, measure(pred.mean, lm), lm, NoiseModel{}.measurement);
    EXPECT_NEAR(u.posterior.mean.x, 2.0, 1e-15);
    EXPECT_NEAR(u.posterior.mean.y, 1.0, 1e-15);
    EXPECT_NEAR(u.posterior.mean.theta, 0.4, 1e-15);
}

TEST(Update, CertainPriorIgnoresMeasurement) {
    const BeliefState pred{{2, 1, 0.4}, Eigen::Matrix3d::Zero()};
    const UpdateResult u = update(pred, {10.0, 1.0}, {0, 0}, NoiseModel{}.measurement);
    EXPECT_TRUE(u.gain.isZero(0.0));
    EXPECT_EQ(u.posterior.mean.x, 2.0);
    EXPECT_EQ(u.posterior.mean.y, 1.0);
    EXPECT_EQ(u.posterior.mean.theta, 0.4);
}

// Hand-run Kalman filter on the model linearized at (0,0,0) with landmark (1,0):
// H = [[-1, 0, 0], [0, -1, -1]], diagonal P and R, so every entry is a scalar formula.
TEST(Update, MatchesHandRunKalmanFilter) {
    const double p1 = 0.04, p2 = 0.09, p3 = 0.01, r1 = 0.02, r2 = 0.005;
    const BeliefState pred{{0, 0, 0}, Eigen::Vector3d(p1, p2, p3).asDiagonal()};
    const double z_range = 1.1, z_bearing = 0.05;
    const UpdateResult u = update(pred, {z_range, z_bearing}, {1, 0}, Eigen::Vector2d(r1, r2).asDiagonal());

    const double nu1 = z_range - 1.0, nu2 = z_bearing - 0.0;
    const double s1 = p1 + r1, s2 = p2 + p3 + r2;
    EXPECT_NEAR(u.innovation_cov(0, 0), s1, 1e-15);
    EXPECT_NEAR(u.innovation_cov(1, 1), s2, 1e-15);
    EXPECT_NEAR(u.innovation_cov(0, 1), 0.0, 1e-15);

    EXPECT_NEAR(u.posterior.mean.x, -p1 / s1 * nu1, 1e-9);
    EXPECT_NEAR(u.posterior.mean.y, -p2 / s2 * nu2, 1e-9);
    EXPECT_NEAR(u.posterior.mean.theta, -p3 / s2 * nu2, 1e-9);

    const Eigen::Matrix3d& pc = u.posterior.cov;
    EXPECT_NEAR(pc(0, 0), p1 * r1 / s1, 1e-9);
    EXPECT_NEAR(pc(1, 1), p2 - p2 * p2 / s2, 1e-9);
    EXPECT_NEAR(pc(2, 2), p3 - p3 * p3 / s2, 1e-9);
    EXPECT_NEAR(pc(1, 2), -p2 * p3 / s2, 1e-9);
    EXPECT_NEAR(pc(0, 1), 0.0, 1e-9);
    EXPECT_NEAR(pc(0, 2), 0.0, 1e-9);
}

TEST(Update, BearingRepresentativeInvariance) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-3, 3);
    for (int i = 0; i < 200; ++i) {
        const BeliefState pred{{u(rng) + 4, u(rng), u(rng)}, Eigen::Matrix3d::Identity() * 0.02};
        const Measurement z{std::abs(u(rng)) + 1, u(rng)};
        const UpdateResult a = update(pred, z, {0, 0}, NoiseModel{}.measurement);
        const UpdateResult b = update(pred, {z.range, z.bearing + kTwoPi}, {0, 0}, NoiseModel{}.measurement);
        EXPECT_NEAR(a.posterior.mean.x, b.posterior.mean.x, 1e-12);
        EXPECT_NEAR(a.posterior.mean.y, b.posterior.mean.y, 1e-12);
        EXPECT_NEAR(wrap_angle(a.posterior.mean.theta - b.posterior.mean.theta), 0.0, 1e-12);
        EXPECT_EQ(a.posterior.cov, b.posterior.cov);
    }
}

TEST(Update, IllConditionedInnovationIsFault) {
    const BeliefState pred{{1, 0, 0}, Eigen::Vector3d(1e6, 0, 0).asDiagonal()};
    EXPECT_THROW(update(pred, {1, 0}, {0, 0}, Eigen::Matrix2d::Identity() * 1e-9), FaultError);
}

TEST(Residue, Examples) {
    EXPECT_TRUE(residue({1, 2, 3}, {1, 2, 3}).r.isZero(0.0));
    const Residue r = residue({1, 1, 0.1}, {0.9, 1, 0.1});
    EXPECT_NEAR(r.r(0), 0.1, 1e-15);
    EXPECT_EQ(r.r(1), 0.0);
    EXPECT_EQ(r.r(2), 0.0);
    const Residue w = residue({0, 0, 3.1}, {0, 0, -3.1});
    EXPECT_NEAR(w.r(2), 6.2 - kTwoPi, 1e-12);
    EXPECT_NEAR(w.r(2), -0.0831853, 1e-6);
}

TEST(Residue, EqualsGainTimesInnovation) {
    const BeliefState pred{{3, 1, 0.5}, Eigen::Matrix3d::Identity() * 0.03};
    const UpdateResult u = update(pred, {3.0, -2.5}, {0, 0}, NoiseModel{}.measurement);
    const Residue r = residue(u.posterior.mean, pred.mean);
    EXPECT_LT((r.r - u.gain * u.innovation).norm(), 1e-12);
}

// Long closed loop under random attacks: covariance stays symmetric and PSD.
TEST(ClosedLoop, CovarianceStaysSymmetricPsd) {
    EnvConfig cfg;
    cfg.horizon = 10000;
    AttackEnv env(cfg);
    env.set_record_trace(false);
    env.reset(99);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> a(-1, 1);
    while (!env.done()) {
        env.step({a(rng), 0.3 * a(rng)});
        const Eigen::Matrix3d& p = env.belief().cov;
        ASSERT_LE((p - p.transpose()).cwiseAbs().maxCoeff(), 1e-9);
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(p, Eigen::EigenvaluesOnly);
        ASSERT_GE(es.eigenvalues().minCoeff(), -1e-12);
    }
}
