#pragma once

#include <cmath>
#include <numbers>

namespace avlab {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Maps an angle to (-pi, pi].
inline double wrap_angle(double a) {
    double r = std::remainder(a, kTwoPi);
    if (r <= -kPi) r += kTwoPi;
    return r;
}

} // namespace avlab
