#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "avlab/control.hpp"
#include "avlab/environment.hpp"

using namespace avlab;

TEST(CircleReference, StartsOnPositiveX) {
    const ReferencePoint r = circle_reference(0, 0.1, {});
    EXPECT_NEAR(r.x_r, 5.0, 1e-15);
    EXPECT_NEAR(r.y_r, 0.0, 1e-15);
    EXPECT_NEAR(r.theta_r, kPi / 2, 1e-15);
    EXPECT_NEAR(r.omega_r, 1.0 / 5.0, 1e-15);
    EXPECT_EQ(r.v_r, 1.0);
}

TEST(CircleReference, HalfLap) {
    // angle = speed * k * dt / radius = pi  =>  k * dt = 5 pi. Use dt so that k is exact.
    const double dt = 5.0 * kPi / 100.0;
    const ReferencePoint r = circle_reference(100, dt, {});
    EXPECT_NEAR(r.x_r, -5.0, 1e-12);
    EXPECT_NEAR(r.y_r, 0.0, 1e-12);
    EXPECT_NEAR(r.theta_r, -kPi / 2, 1e-12);
}

TEST(CircleReference, RejectsNonPositiveRadius) {
    CircleTrajectory c;
    c.radius = 0.0;
    EXPECT_THROW(circle_reference(0, 0.1, c), ConfigError);
    EXPECT_THROW(c.validate(), ConfigError);
    c.radius = INFINITY;
    EXPECT_THROW(c.validate(), ConfigError);
}

TEST(TrackingControl, ZeroErrorIsFeedforward) {
    const ReferencePoint ref = circle_reference(17, 0.1, {});
    const ControlInput u = tracking_control(ref.pose(), ref, {}, 1.0, {});
    EXPECT_NEAR(u.v, ref.v_r, 1e-12);
    // omega = (v / L) tan(phi)
    EXPECT_NEAR(u.v * std::tan(u.phi), ref.omega_r, 1e-12);
}

TEST(TrackingControl, SpeedsUpWhenBehind) {
    ReferencePoint ref;
    ref.x_r = 1.0;
    ref.v_r = 1.0;
    const ControlInput u = tracking_control({0, 0, 0}, ref, {}, 1.0, {});
    EXPECT_GT(u.v, ref.v_r);
}

TEST(TrackingControl, RestAtZeroReference) {
    const ControlInput u = tracking_control({0, 0, 0}, ReferencePoint{}, {}, 1.0, {});
    EXPECT_EQ(u.v, 0.0);
    EXPECT_EQ(u.phi, 0.0);
}

TEST(TrackingControl, AlwaysWithinLimits) {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> pos(-20, 20), ang(-kPi, kPi), sp(0, 3);
    const ActuatorLimits lim;
    for (int i = 0; i < 10000; ++i) {
        ReferencePoint ref{pos(rng), pos(rng), ang(rng), sp(rng), pos(rng)};
        const ControlInput u = tracking_control({pos(rng), pos(rng), ang(rng)}, ref, {}, 1.0, lim);
        EXPECT_GE(u.v, 0.0);
        EXPECT_LE(u.v, lim.v_max);
        EXPECT_LE(std::abs(u.phi), lim.phi_max);
    }
}

TEST(TrackingControl, GainsValidation) {
    ControllerGains g;
    g.k_y = 0.0;
    EXPECT_THROW(g.validate(), ConfigError);
}

// Noise-free closed loop on the true state, one full lap after a 50-step transient.
TEST(ClosedLoop, BaselineLapTrackingError) {
    const VehicleParams p;
    const CircleTrajectory c;
    const long lap = std::lround(2 * kPi * c.radius / c.speed / p.dt);
    VehicleState s = circle_reference(0, p.dt, c).pose();
    double sum = 0.0;
    long n = 0;
    for (long k = 0; k < 50 + lap; ++k) {
        const ControlInput u = tracking_control(s, circle_reference(k, p.dt, c), {}, p.wheelbase, p.limits);
        s = step(s, u, {}, p);
        if (k >= 50) {
            sum += tracking_cost(s, circle_reference(k + 1, p.dt, c).pose(), Eigen::Matrix3d::Identity());
            ++n;
        }
    }
    EXPECT_LT(sum / static_cast<double>(n), 1e-2);
}

TEST(ClosedLoop, RecoversFromOffset) {
    const VehicleParams p;
    const CircleTrajectory c;
    VehicleState s{4.0, -0.5, kPi / 2 + 0.3};
    for (long k = 0; k < 300; ++k) s = step(s, tracking_control(s, circle_reference(k, p.dt, c), {}, 1.0, p.limits), {}, p);
    EXPECT_LT(tracking_cost(s, circle_reference(300, p.dt, c).pose(), Eigen::Matrix3d::Identity()), 1e-3);
}
