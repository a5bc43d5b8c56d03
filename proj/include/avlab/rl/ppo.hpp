#pragma once

// Clipped-surrogate proximal policy optimization with a separate value network.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "avlab/errors.hpp"
#include "avlab/rl/gae.hpp"
#include "avlab/rl/mlp.hpp"
#include "avlab/rl/optim.hpp"
#include "avlab/rl/policy.hpp"

namespace avlab::rl {

struct PpoConfig {
    double gamma = 0.99;
    double gae_lambda = 0.95;
    double clip_epsilon = 0.2;
    double learning_rate = 3e-4;
    int epochs_per_batch = 10;
    int batch_size = 500; // environment steps per update
    int minibatch_size = 100;
    double entropy_coef = 0.0;
    double max_grad_norm = 0.5;

    void validate() const {
        if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("ppo.gamma must lie in (0, 1]");
        if (!(gae_lambda > 0.0 && gae_lambda <= 1.0)) throw ConfigError("ppo.gae_lambda must lie in (0, 1]");
        if (!(clip_epsilon > 0.0)) throw ConfigError("ppo.clip_epsilon must be positive");
        if (!(learning_rate > 0.0)) throw ConfigError("ppo.learning_rate must be positive");
        if (epochs_per_batch < 1) throw ConfigError("ppo.epochs_per_batch must be positive");
        if (batch_size < 2) throw ConfigError("ppo.batch_size must be at least 2");
        if (minibatch_size < 1 || minibatch_size > batch_size)
            throw ConfigError("ppo.minibatch_size must lie in [1, batch_size]");
        if (entropy_coef < 0.0) throw ConfigError("ppo.entropy_coef must be non-negative");
        if (!(max_grad_norm > 0.0)) throw ConfigError("ppo.max_grad_norm must be positive");
    }
};

inline double clipped_surrogate(double ratio, double advantage, double epsilon) {
    return std::min(ratio * advantage, std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon) * advantage);
}

// Observations and pre-squash actions are stored column-wise.
struct RolloutBatch {
    Eigen::MatrixXd observations;
    Eigen::MatrixXd actions;
    Eigen::VectorXd log_probs;
    Eigen::VectorXd advantages;
    Eigen::VectorXd returns;

    Eigen::Index size() const { return observations.cols(); }

    RolloutBatch gather(std::span<const Eigen::Index> idx) const {
        const auto n = static_cast<Eigen::Index>(idx.size());
        RolloutBatch b{Eigen::MatrixXd(observations.rows(), n), Eigen::MatrixXd(actions.rows(), n),
                       Eigen::VectorXd(n), Eigen::VectorXd(n), Eigen::VectorXd(n)};
        for (Eigen::Index j = 0; j < n; ++j) {
            const Eigen::Index i = idx[static_cast<std::size_t>(j)];
            b.observations.col(j) = observations.col(i);
            b.actions.col(j) = actions.col(i);
            b.log_probs(j) = log_probs(i);
            b.advantages(j) = advantages(i);
            b.returns(j) = returns(i);
        }
        return b;
    }
};

struct PolicyLoss {
    double loss = 0.0; // -(mean surrogate) - entropy_coef * mean entropy
    double surrogate = 0.0;
    double entropy = 0.0;
    double clip_fraction = 0.0;
    double approx_kl = 0.0;
    Eigen::VectorXd grad;
};

inline PolicyLoss ppo_policy_loss(const GaussianPolicy& policy, const RolloutBatch& b, double epsilon,
                                  double entropy_coef) {
    Mlp::Tape tape;
    const GaussianPolicy::Heads h = policy.heads(b.observations, &tape);
    const Eigen::Index n = b.size();
    const int a = policy.action_dim();
    const double inv_n = 1.0 / static_cast<double>(n);

    Eigen::MatrixXd d_mean(a, n);
    Eigen::MatrixXd d_log_std(a, n);
    PolicyLoss out;
    double clipped = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
        const Eigen::ArrayXd sigma = h.log_std.col(j).array().exp();
        const Eigen::ArrayXd z = (b.actions.col(j) - h.mean.col(j)).array() / sigma;
        const double logp = (-0.5 * z.square() - h.log_std.col(j).array() - kHalfLog2Pi).sum();
        const double log_ratio = logp - b.log_probs(j);
        const double ratio = std::exp(log_ratio);
        const double adv = b.advantages(j);
        const double s = clipped_surrogate(ratio, adv, epsilon);
        out.surrogate += s;
        out.approx_kl += (ratio - 1.0) - log_ratio;
        if (std::abs(ratio - 1.0) > epsilon) clipped += 1.0;
        // The min() picks the unclipped branch (derivative ratio * adv) unless
        // the clipped branch is strictly smaller, whose derivative is zero.
        const double d_logp = ratio * adv <= std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon) * adv ? ratio * adv : 0.0;
        const double g = -d_logp * inv_n;
        d_mean.col(j) = (g * z / sigma).matrix();
        d_log_std.col(j) = (g * (z.square() - 1.0)).matrix();
        d_log_std.col(j).array() -= entropy_coef * inv_n;
        out.entropy += (h.log_std.col(j).array() + 0.5 + kHalfLog2Pi).sum();
    }
    out.surrogate *= inv_n;
    out.entropy *= inv_n;
    out.approx_kl *= inv_n;
    out.clip_fraction = clipped * inv_n;
    out.loss = -out.surrogate - entropy_coef * out.entropy;
    out.grad = Eigen::VectorXd::Zero(policy.net().parameter_count());
    policy.backward(tape, h, d_mean, d_log_std, out.grad);
    return out;
}

struct ValueLoss {
    double loss = 0.0; // 0.5 * mean (V - target)^2
    Eigen::VectorXd grad;
};

inline ValueLoss value_loss(const Mlp& value, const Eigen::MatrixXd& observations, const Eigen::VectorXd& targets) {
    Mlp::Tape tape;
    const Eigen::MatrixXd v = value.forward(observations, tape);
    const Eigen::RowVectorXd err = v.row(0) - targets.transpose();
    const double n = static_cast<double>(targets.size());
    ValueLoss out;
    out.loss = 0.5 * err.squaredNorm() / n;
    out.grad = Eigen::VectorXd::Zero(value.parameter_count());
    value.backward(tape, Eigen::MatrixXd(err / n), out.grad);
    return out;
}

struct PpoDiagnostics {
    double policy_loss = 0.0;
    double value_loss = 0.0;
    double entropy = 0.0;
    double clip_fraction = 0.0;
    double approx_kl = 0.0; // between the behavior policy and the updated policy
    int minibatches = 0;
};

inline PpoDiagnostics ppo_update(GaussianPolicy& policy, Mlp& value, Adam& policy_opt, Adam& value_opt,
                                 RolloutBatch batch, const PpoConfig& cfg, std::mt19937_64& rng) {
    const Eigen::VectorXd policy_backup = policy.net().parameters();
    const Eigen::VectorXd value_backup = value.parameters();
    const auto rollback = [&](const char* what) {
        policy.net().parameters() = policy_backup;
        value.parameters() = value_backup;
        throw FaultError(std::string("ppo_update: ") + what);
    };

    normalize_advantages(batch.advantages);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(batch.size()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    const std::size_t mb = static_cast<std::size_t>(std::min<Eigen::Index>(cfg.minibatch_size, batch.size()));

    PpoDiagnostics d;
    for (int epoch = 0; epoch < cfg.epochs_per_batch; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < order.size(); start += mb) {
            const std::size_t len = std::min(mb, order.size() - start);
            const RolloutBatch m = batch.gather(std::span<const Eigen::Index>(order).subspan(start, len));
            PolicyLoss pl = ppo_policy_loss(policy, m, cfg.clip_epsilon, cfg.entropy_coef);
            ValueLoss vl = value_loss(value, m.observations, m.returns);
            if (!std::isfinite(pl.loss) || !std::isfinite(vl.loss) || !pl.grad.allFinite() || !vl.grad.allFinite())
                rollback("non-finite loss");
            clip_grad_norm(pl.grad, cfg.max_grad_norm);
            clip_grad_norm(vl.grad, cfg.max_grad_norm);
            policy_opt.step(policy.net().parameters(), pl.grad);
            value_opt.step(value.parameters(), vl.grad);
            d.policy_loss += pl.loss;
            d.value_loss += vl.loss;
            d.entropy += pl.entropy;
            d.clip_fraction += pl.clip_fraction;
            ++d.minibatches;
        }
    }
    if (!policy.net().finite() || !value.finite()) rollback("non-finite parameters");
    if (d.minibatches > 0) {
        d.policy_loss /= d.minibatches;
        d.value_loss /= d.minibatches;
        d.entropy /= d.minibatches;
        d.clip_fraction /= d.minibatches;
    }
    d.approx_kl = ppo_policy_loss(policy, batch, cfg.clip_epsilon, 0.0).approx_kl;
    return d;
}

} // namespace avlab::rl
