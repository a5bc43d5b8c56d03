#pragma once

// Circular reference trajectory and the nominal kinematic tracking controller.

#include <algorithm>
#include <cmath>

#include "avlab/angles.hpp"
#include "avlab/dynamics.hpp"
#include "avlab/errors.hpp"

namespace avlab {

struct ReferencePoint {
    double x_r = 0.0;
    double y_r = 0.0;
    double theta_r = 0.0;
    double v_r = 0.0;     // feedforward speed
    double omega_r = 0.0; // feedforward yaw rate

    VehicleState pose() const { return {x_r, y_r, theta_r}; }
};

struct ControllerGains {
    double k_x = 1.0;
    double k_y = 4.0;
    double k_theta = 2.0;

    void validate() const {
        if (!(k_x > 0.0) || !(k_y > 0.0) || !(k_theta > 0.0))
            throw ConfigError("controller gains must all be positive");
    }
};

struct CircleTrajectory {
    double radius = 5.0; // m
    double speed = 1.0;  // m/s
    Position center{0.0, 0.0};

    void validate() const {
        if (!(radius > 0.0) || !std::isfinite(radius)) throw ConfigError("trajectory.radius must be finite and positive");
        if (!(speed > 0.0) || !std::isfinite(speed)) throw ConfigError("trajectory.speed must be finite and positive");
    }
};

// Counter-clockwise circle starting at angle 0 (the +x side of the center).
inline ReferencePoint circle_reference(long k, double dt, const CircleTrajectory& c) {
    if (!(c.radius > 0.0) || !(c.speed > 0.0)) throw ConfigError("circle_reference: radius and speed must be positive");
    const double angle = c.speed * static_cast<double>(k) * dt / c.radius;
    ReferencePoint r;
    r.x_r = c.center.x + c.radius * std::cos(angle);
    r.y_r = c.center.y + c.radius * std::sin(angle);
    r.theta_r = wrap_angle(angle + kPi / 2.0);
    r.v_r = c.speed;
    r.omega_r = c.speed / c.radius;
    return r;
}

struct TrackingError {
    double e_x = 0.0; // along-track, vehicle frame
    double e_y = 0.0; // cross-track, vehicle frame
    double e_theta = 0.0;
};

inline TrackingError vehicle_frame_error(const VehicleState& s, const ReferencePoint& ref) {
    const double dx = ref.x_r - s.x;
    const double dy = ref.y_r - s.y;
    const double c = std::cos(s.theta);
    const double sn = std::sin(s.theta);
    return {c * dx + sn * dy, -sn * dx + c * dy, wrap_angle(ref.theta_r - s.theta)};
}

inline constexpr double kDefaultVFloor = 0.1;

// Lyapunov-style kinematic tracking law mapped to steering through the
// bicycle relation omega = (v / L) tan(phi). Output is saturated, never rejected.
inline ControlInput tracking_control(const VehicleState& belief_mean, const ReferencePoint& ref,
                                     const ControllerGains& g, double wheelbase, const ActuatorLimits& limits,
                                     double v_floor = kDefaultVFloor) {
    const TrackingError e = vehicle_frame_error(belief_mean, ref);
    const double v = ref.v_r * std::cos(e.e_theta) + g.k_x * e.e_x;
    const double omega = ref.omega_r + ref.v_r * (g.k_y * e.e_y + g.k_theta * std::sin(e.e_theta));
    const double v_sat = std::clamp(v, 0.0, limits.v_max);
    const double phi = std::atan(wheelbase * omega / std::max(v_sat, v_floor));
    return limits.clamp({v_sat, phi});
}

} // namespace avlab
