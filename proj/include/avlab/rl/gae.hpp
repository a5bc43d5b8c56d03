#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "avlab/errors.hpp"

namespace avlab::rl {

struct AdvantageEstimate {
    Eigen::VectorXd advantages;
    Eigen::VectorXd returns;
};

// Generalized advantage estimation. `values` carries one extra bootstrap
// entry for the state after the last transition; dones[t] cuts the
// recursion after step t.
inline AdvantageEstimate gae(std::span<const double> rewards, std::span<const double> values,
                             std::span<const std::uint8_t> dones, double gamma, double lambda) {
    const std::size_t n = rewards.size();
    if (values.size() != n + 1 || dones.size() != n)
        throw UsageError("gae: expected n rewards, n dones and n + 1 values");
    AdvantageEstimate out{Eigen::VectorXd(static_cast<Eigen::Index>(n)), Eigen::VectorXd(static_cast<Eigen::Index>(n))};
    double running = 0.0;
    for (std::size_t i = n; i-- > 0;) {
        const double live = dones[i] ? 0.0 : 1.0;
        const double delta = rewards[i] + gamma * values[i + 1] * live - values[i];
        running = delta + gamma * lambda * live * running;
        out.advantages(static_cast<Eigen::Index>(i)) = running;
        out.returns(static_cast<Eigen::Index>(i)) = running + values[i];
    }
    return out;
}

inline void normalize_advantages(Eigen::VectorXd& adv) {
    if (adv.size() < 2) return;
    const double mean = adv.mean();
    const double var = (adv.array() - mean).square().mean();
    adv = ((adv.array() - mean) / (std::sqrt(var) + 1e-8)).matrix();
}

} // namespace avlab::rl
