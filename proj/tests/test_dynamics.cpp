#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "avlab/dynamics.hpp"

using namespace avlab;

namespace {

VehicleParams params() { return {}; }

double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

} // namespace

TEST(Step, ZeroVelocityFixedPoint) {
    const VehicleState s = step({0, 0, 0}, {0, 0}, {0, 0}, params());
    EXPECT_EQ(s.x, 0.0);
    EXPECT_EQ(s.y, 0.0);
    EXPECT_EQ(s.theta, 0.0);
}

TEST(Step, StraightLine) {
    const VehicleState s = step({0, 0, 0}, {1.0, 0}, {0, 0}, params());
    EXPECT_NEAR(s.x, 0.1, 1e-15);
    EXPECT_NEAR(s.y, 0.0, 1e-15);
    EXPECT_NEAR(s.theta, 0.0, 1e-15);
}

TEST(Step, FullSteering) {
    const VehicleState s = step({0, 0, 0}, {1.0, kPi / 4}, {0, 0}, params());
    EXPECT_NEAR(s.x, 0.1, 1e-15);
    EXPECT_NEAR(s.y, 0.0, 1e-15);
    EXPECT_NEAR(s.theta, 0.1, 1e-15);
}

TEST(Step, AttackAddsToSpeed) {
    const VehicleState s = step({0, 0, 0}, {1.0, 0}, {0.5, 0}, params());
    EXPECT_NEAR(s.x, 0.15, 1e-15);
    EXPECT_NEAR(s.y, 0.0, 1e-15);
}

TEST(Step, SaturationAppliesToSum) {
    // 1.8 + 0.5 exceeds v_max = 2; steering 0.7 + 0.3 exceeds pi/4.
    const VehicleState s = step({0, 0, 0}, {1.8, 0.7}, {0.5, 0.3}, params());
    EXPECT_NEAR(s.x, 0.2, 1e-15);
    EXPECT_NEAR(s.theta, 0.1 * 2.0 * std::tan(kPi / 4), 1e-15);
    const ControlInput e = effective_input({0.2, 0}, {-1.0, 0}, ActuatorLimits{});
    EXPECT_EQ(e.v, 0.0);
}

TEST(Step, AttackAdditivityWithinLimits) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> pos(-10, 10), ang(-kPi, kPi), v(0, 1), phi(-0.3, 0.3), d(-0.4, 0.4);
    for (int i = 0; i < 1000; ++i) {
        const VehicleState s{pos(rng), pos(rng), ang(rng)};
        const ControlInput u{v(rng), phi(rng)};
        const AttackSignal a{d(rng) * 0.5, d(rng)};
        const ControlInput sum{u.v + a.v_d, u.phi + a.phi_d};
        if (sum.v < 0) continue;
        const VehicleState s1 = step(s, u, a, params());
        const VehicleState s2 = step(s, sum, {}, params());
        EXPECT_EQ(s1.x, s2.x);
        EXPECT_EQ(s1.y, s2.y);
        EXPECT_EQ(s1.theta, s2.theta);
    }
}

TEST(Step, HeadingAlwaysWrapped) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> ang(-kPi, kPi), noise(-10, 10);
    for (int i = 0; i < 10000; ++i) {
        const VehicleState s = step({0, 0, ang(rng)}, {2.0, kPi / 4}, {}, params(), {0, 0, noise(rng)});
        EXPECT_GT(s.theta, -kPi);
        EXPECT_LE(s.theta, kPi);
    }
    EXPECT_EQ(wrap_angle(-kPi), kPi);
    EXPECT_EQ(wrap_angle(kPi), kPi);
}

TEST(Step, RejectsBadParameters) {
    VehicleParams p;
    p.dt = 0.0;
    EXPECT_THROW(step({}, {}, {}, p), ConfigError);
    p = {};
    p.wheelbase = -1.0;
    EXPECT_THROW(step({}, {}, {}, p), ConfigError);
    EXPECT_THROW(step({NAN, 0, 0}, {}, {}, params()), FaultError);
}

TEST(Step, NoiseDeterminism) {
    NoiseModel nm;
    NoiseSource a(nm, 42), b(nm, 42);
    for (int i = 0; i < 100; ++i) {
        const VehicleState s1 = step({1, 2, 0.3}, {1, 0.1}, {}, params(), a.process());
        const VehicleState s2 = step({1, 2, 0.3}, {1, 0.1}, {}, params(), b.process());
        EXPECT_EQ(s1.x, s2.x);
        EXPECT_EQ(s1.y, s2.y);
        EXPECT_EQ(s1.theta, s2.theta);
    }
}

TEST(Measure, Examples) {
    Measurement z = measure({0, 0, 0}, {3, 4});
    EXPECT_NEAR(z.range, 5.0, 1e-15);
    EXPECT_NEAR(z.bearing, 0.9272952180016122, 1e-12);
    z = measure({0, 0, 0}, {1, 0});
    EXPECT_NEAR(z.range, 1.0, 1e-15);
    EXPECT_NEAR(z.bearing, 0.0, 1e-15);
    z = measure({0, 0, kPi / 2}, {0, 1});
    EXPECT_NEAR(z.range, 1.0, 1e-15);
    EXPECT_NEAR(z.bearing, 0.0, 1e-15);
}

TEST(Measure, LandmarkCoincidenceIsGeometryFault) {
    EXPECT_THROW(measure({1, 1, 0}, {1, 1}), GeometryError);
    EXPECT_THROW(jacobian_g_state({1, 1, 0}, {1, 1}), GeometryError);
}

TEST(Measure, NegativeRangeClampedToZero) {
    const Measurement z = measure({0, 0, 0}, {0.01, 0}, {-1.0, 0.0});
    EXPECT_EQ(z.range, 0.0);
}

TEST(Jacobian, StateExamples) {
    EXPECT_TRUE(jacobian_f_state({1, 2, 0.7}, {0, 0.3}, 0.1).isIdentity(0.0));
    const Eigen::Matrix3d f = jacobian_f_state({0, 0, 0}, {1, 0}, 0.1);
    EXPECT_NEAR(f(0, 2), 0.0, 1e-15);
    EXPECT_NEAR(f(1, 2), 0.1, 1e-15);
}

TEST(Jacobian, MeasurementExamples) {
    const auto h = jacobian_g_state({0, 0, 0}, {1, 0});
    EXPECT_NEAR(h(0, 0), -1.0, 1e-15);
    EXPECT_NEAR(h(0, 1), 0.0, 1e-15);
    EXPECT_NEAR(h(0, 2), 0.0, 1e-15);
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-5, 5);
    for (int i = 0; i < 50; ++i) EXPECT_EQ(jacobian_g_state({u(rng), u(rng), u(rng)}, {7, 7})(1, 2), -1.0);
}

// Central finite differences of step() and measure() as independent oracles.
TEST(Jacobian, MatchesFiniteDifferences) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> pos(-10, 10), ang(-3.0, 3.0), v(0.0, 2.0), phi(-0.7, 0.7);
    const VehicleParams p;
    const Position lm{0.5, -0.3};
    const double h = 1e-6;
    for (int i = 0; i < 100; ++i) {
        const VehicleState s{pos(rng), pos(rng), ang(rng)};
        const ControlInput u{v(rng), phi(rng)};
        const Eigen::Matrix3d f = jacobian_f_state(s, p.limits.clamp(u), p.dt);
        const auto g = jacobian_g_state(s, lm);
        for (int j = 0; j < 3; ++j) {
            Eigen::Vector3d sp = s.vec(), sm = s.vec();
            sp(j) += h;
            sm(j) -= h;
            const VehicleState a = step({sp(0), sp(1), sp(2)}, u, {}, p);
            const VehicleState b = step({sm(0), sm(1), sm(2)}, u, {}, p);
            const Eigen::Vector3d fd((a.x - b.x) / (2 * h), (a.y - b.y) / (2 * h),
                                     wrap_angle(a.theta - b.theta) / (2 * h));
            for (int r = 0; r < 3; ++r) EXPECT_LT(rel_err(f(r, j), fd(r)), 1e-6) << "f(" << r << "," << j << ")";

            const Measurement za = measure({sp(0), sp(1), sp(2)}, lm);
            const Measurement zb = measure({sm(0), sm(1), sm(2)}, lm);
            const double d_range = (za.range - zb.range) / (2 * h);
            const double d_bearing = wrap_angle(za.bearing - zb.bearing) / (2 * h);
            EXPECT_LT(rel_err(g(0, j), d_range), 1e-6);
            EXPECT_LT(rel_err(g(1, j), d_bearing), 1e-6);
        }
    }
}

TEST(Noise, EmpiricalCovarianceMatches) {
    NoiseModel nm;
    nm.process << 2e-3, 5e-4, 0, 5e-4, 1e-3, 2e-4, 0, 2e-4, 5e-4;
    nm.validate();
    NoiseSource src(nm, 123);
    const int n = 100000;
    Eigen::Matrix3d acc = Eigen::Matrix3d::Zero();
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (int i = 0; i < n; ++i) {
        const Eigen::Vector3d w = src.process();
        acc += w * w.transpose();
        mean += w;
    }
    mean /= n;
    const Eigen::Matrix3d cov = acc / n - mean * mean.transpose();
    EXPECT_LT((cov - nm.process).norm() / nm.process.norm(), 0.05);
}

TEST(Noise, Validation) {
    NoiseModel nm;
    nm.process(0, 1) = 1e-3;
    EXPECT_THROW(nm.validate(), ConfigError); // asymmetric
    nm = {};
    nm.measurement(0, 0) = 0.0;
    EXPECT_THROW(nm.validate(), ConfigError); // R must be positive definite
    nm = {};
    nm.process(2, 2) = -1e-3;
    EXPECT_THROW(nm.validate(), ConfigError);
    EXPECT_NO_THROW(NoiseModel::zero().process_is_zero());
}

TEST(Limits, Validation) {
    ActuatorLimits l;
    l.v_max = 0;
    EXPECT_THROW(l.validate(), ConfigError);
    l = {};
    l.phi_max = 2.0;
    EXPECT_THROW(l.validate(), ConfigError);
}
