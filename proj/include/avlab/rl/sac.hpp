#pragma once

// Soft actor-critic: twin Q critics with Polyak-averaged targets and an
// automatically tuned entropy temperature. Critics see the observation
// stacked with the normalized action tanh(u).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "avlab/errors.hpp"
#include "avlab/rl/mlp.hpp"
#include "avlab/rl/optim.hpp"
#include "avlab/rl/policy.hpp"
#include "avlab/rl/ppo.hpp"

namespace avlab::rl {

struct SacConfig {
    double gamma = 0.99;
    double tau = 0.005;
    double learning_rate = 3e-4;
    int batch_size = 256;
    std::size_t replay_capacity = 100000;
    long warmup_steps = 1000; // uniform random actions before learning starts
    int updates_per_step = 1;
    double initial_alpha = 0.2;
    bool auto_alpha = true;
    double target_entropy = std::numeric_limits<double>::quiet_NaN(); // NaN: -(action dimension)
    double max_grad_norm = 0.5;

    void validate() const {
        if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("sac.gamma must lie in [0, 1]");
        if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("sac.tau must lie in (0, 1]");
        if (!(learning_rate > 0.0)) throw ConfigError("sac.learning_rate must be positive");
        if (batch_size < 1) throw ConfigError("sac.batch_size must be positive");
        if (replay_capacity < 1) throw ConfigError("sac.replay_capacity must be positive");
        if (warmup_steps < 0) throw ConfigError("sac.warmup_steps must be non-negative");
        if (updates_per_step < 0) throw ConfigError("sac.updates_per_step must be non-negative");
        if (!(initial_alpha > 0.0)) throw ConfigError("sac.initial_alpha must be positive");
        if (!(max_grad_norm > 0.0)) throw ConfigError("sac.max_grad_norm must be positive");
    }
};

struct Transition {
    Eigen::VectorXd observation;
    Eigen::VectorXd action; // pre-squash
    double reward = 0.0;
    Eigen::VectorXd next_observation;
    bool done = false;
    double log_prob = 0.0; // at behavior time
};

// Fixed-capacity ring buffer; the oldest transition is evicted first.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
        if (capacity_ == 0) throw ConfigError("ReplayBuffer: capacity must be positive");
        data_.reserve(std::min<std::size_t>(capacity_, 1 << 16));
    }

    void push(Transition t) {
        if (data_.size() < capacity_) {
            data_.push_back(std::move(t));
        } else {
            data_[head_] = std::move(t);
        }
        head_ = (head_ + 1) % capacity_;
        ++pushed_;
    }

    std::size_t size() const { return data_.size(); }
    std::size_t capacity() const { return capacity_; }
    std::size_t total_pushed() const { return pushed_; }

    // Logical index 0 is the oldest retained transition.
    const Transition& operator[](std::size_t i) const {
        if (i >= data_.size()) throw UsageError("ReplayBuffer: index out of range");
        const std::size_t start = data_.size() < capacity_ ? 0 : head_;
        return data_[(start + i) % capacity_];
    }

    std::vector<std::size_t> sample_indices(std::size_t n, std::mt19937_64& rng) const {
        if (data_.empty()) throw UsageError("ReplayBuffer: cannot sample from an empty buffer");
        std::uniform_int_distribution<std::size_t> pick(0, data_.size() - 1);
        std::vector<std::size_t> idx(n);
        for (auto& i : idx) i = pick(rng);
        return idx;
    }

private:
    std::size_t capacity_;
    std::size_t head_ = 0;
    std::size_t pushed_ = 0;
    std::vector<Transition> data_;
};

struct SacBatch {
    Eigen::MatrixXd observations;
    Eigen::MatrixXd actions; // pre-squash
    Eigen::VectorXd rewards;
    Eigen::MatrixXd next_observations;
    Eigen::VectorXd dones; // 1.0 for terminal transitions

    Eigen::Index size() const { return observations.cols(); }

    static SacBatch gather(const ReplayBuffer& buf, std::span<const std::size_t> idx) {
        const auto n = static_cast<Eigen::Index>(idx.size());
        const Transition& first = buf[idx.front()];
        SacBatch b{Eigen::MatrixXd(first.observation.size(), n), Eigen::MatrixXd(first.action.size(), n),
                   Eigen::VectorXd(n), Eigen::MatrixXd(first.observation.size(), n), Eigen::VectorXd(n)};
        for (Eigen::Index j = 0; j < n; ++j) {
            const Transition& t = buf[idx[static_cast<std::size_t>(j)]];
            b.observations.col(j) = t.observation;
            b.actions.col(j) = t.action;
            b.rewards(j) = t.reward;
            b.next_observations.col(j) = t.next_observation;
            b.dones(j) = t.done ? 1.0 : 0.0;
        }
        return b;
    }
};

inline Eigen::MatrixXd critic_input(const Eigen::MatrixXd& observations, const Eigen::MatrixXd& normalized_actions) {
    Eigen::MatrixXd x(observations.rows() + normalized_actions.rows(), observations.cols());
    x << observations, normalized_actions;
    return x;
}

inline void polyak_update(Mlp& target, const Mlp& online, double tau) {
    target.parameters() = (1.0 - tau) * target.parameters() + tau * online.parameters();
}

class SacAgent {
public:
    SacAgent(int obs_dim, const std::vector<int>& hidden, const Eigen::VectorXd& action_scale, const SacConfig& cfg,
             std::mt19937_64& rng, double initial_log_std = 0.0)
        : policy(obs_dim, hidden, action_scale), log_alpha(std::log(cfg.initial_alpha)) {
        policy.initialize(rng, initial_log_std);
        std::vector<int> qdims{obs_dim + policy.action_dim()};
        qdims.insert(qdims.end(), hidden.begin(), hidden.end());
        qdims.push_back(1);
        q1 = Mlp(qdims);
        q2 = Mlp(qdims);
        q1.initialize(rng);
        q2.initialize(rng);
        q1_target = q1;
        q2_target = q2;
        policy_opt = Adam(policy.net().parameter_count(), cfg.learning_rate);
        q1_opt = Adam(q1.parameter_count(), cfg.learning_rate);
        q2_opt = Adam(q2.parameter_count(), cfg.learning_rate);
        alpha_opt = Adam(1, cfg.learning_rate);
    }

    double alpha() const { return std::exp(log_alpha); }

    GaussianPolicy policy;
    Mlp q1, q2, q1_target, q2_target;
    double log_alpha;
    Adam policy_opt, q1_opt, q2_opt, alpha_opt;
};

// Soft Bellman targets y = r + gamma (1 - done) (min Q'(s', a') - alpha log pi(a'|s')),
// with a' = tanh(mean + sigma * noise).
inline Eigen::VectorXd sac_targets(const GaussianPolicy& policy, const Mlp& q1_target, const Mlp& q2_target,
                                   const SacBatch& b, const Eigen::MatrixXd& noise, double gamma, double alpha) {
    const GaussianPolicy::Heads h = policy.heads(b.next_observations);
    const Eigen::MatrixXd u = h.mean + (h.log_std.array().exp() * noise.array()).matrix();
    Eigen::MatrixXd t(u.rows(), u.cols());
    Eigen::VectorXd logp(u.cols());
    for (Eigen::Index j = 0; j < u.cols(); ++j) {
        t.col(j) = GaussianPolicy::normalized_action(u.col(j));
        logp(j) = GaussianPolicy::squashed_log_prob(u.col(j), h.mean.col(j), h.log_std.col(j));
    }
    const Eigen::MatrixXd x = critic_input(b.next_observations, t);
    const Eigen::RowVectorXd qmin = q1_target.forward(x).cwiseMin(q2_target.forward(x)).row(0);
    Eigen::VectorXd y(b.size());
    for (Eigen::Index j = 0; j < b.size(); ++j)
        y(j) = b.rewards(j) + gamma * (1.0 - b.dones(j)) * (qmin(j) - alpha * logp(j));
    return y;
}

struct ActorLoss {
    double loss = 0.0; // mean(alpha log pi - min Q)
    double mean_log_prob = 0.0;
    Eigen::VectorXd grad;
};

// Reparameterized actor loss with fixed standard-normal noise.
inline ActorLoss sac_actor_loss(const GaussianPolicy& policy, const Mlp& q1, const Mlp& q2,
                                const Eigen::MatrixXd& observations, const Eigen::MatrixXd& noise, double alpha) {
    Mlp::Tape ptape;
    const GaussianPolicy::Heads h = policy.heads(observations, &ptape);
    const Eigen::Index n = observations.cols();
    const double inv_n = 1.0 / static_cast<double>(n);
    const Eigen::MatrixXd sigma = h.log_std.array().exp().matrix();
    const Eigen::MatrixXd u = h.mean + sigma.cwiseProduct(noise);
    Eigen::MatrixXd t(u.rows(), n);
    Eigen::VectorXd logp(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        t.col(j) = GaussianPolicy::normalized_action(u.col(j));
        logp(j) = GaussianPolicy::squashed_log_prob(u.col(j), h.mean.col(j), h.log_std.col(j));
    }

    const Eigen::MatrixXd x = critic_input(observations, t);
    Mlp::Tape t1, t2;
    const Eigen::RowVectorXd v1 = q1.forward(x, t1).row(0);
    const Eigen::RowVectorXd v2 = q2.forward(x, t2).row(0);
    Eigen::MatrixXd pick1 = Eigen::MatrixXd::Zero(1, n);
    Eigen::MatrixXd pick2 = Eigen::MatrixXd::Zero(1, n);
    ActorLoss out;
    for (Eigen::Index j = 0; j < n; ++j) {
        const bool first = v1(j) <= v2(j);
        (first ? pick1 : pick2)(0, j) = 1.0;
        out.loss += alpha * logp(j) - (first ? v1(j) : v2(j));
    }
    out.loss *= inv_n;
    out.mean_log_prob = logp.mean();

    Eigen::VectorXd scratch;
    const Eigen::MatrixXd dx = q1.backward(t1, pick1, scratch) + q2.backward(t2, pick2, scratch);
    const Eigen::MatrixXd dq_dt = dx.bottomRows(policy.action_dim());

    // d/du of (alpha log pi - Q): log pi contains -sum log(1 - tanh^2 u).
    const Eigen::MatrixXd tt = u.array().tanh().matrix();
    const Eigen::MatrixXd d_u =
        inv_n * (alpha * 2.0 * tt.array() - dq_dt.array() * (1.0 - tt.array().square())).matrix();
    const Eigen::MatrixXd d_mean = d_u;
    const Eigen::MatrixXd d_log_std = (d_u.array() * sigma.array() * noise.array() - alpha * inv_n).matrix();
    out.grad = Eigen::VectorXd::Zero(policy.net().parameter_count());
    policy.backward(ptape, h, d_mean, d_log_std, out.grad);
    return out;
}

struct SacDiagnostics {
    double critic_loss = 0.0;
    double actor_loss = 0.0;
    double alpha = 0.0;
    double entropy = 0.0; // -mean log pi under the current policy
};

inline Eigen::MatrixXd standard_normal(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
    return m;
}

inline SacDiagnostics sac_update(SacAgent& agent, const SacBatch& b, const SacConfig& cfg, std::mt19937_64& rng) {
    const int a = agent.policy.action_dim();
    const double target_entropy = std::isnan(cfg.target_entropy) ? -static_cast<double>(a) : cfg.target_entropy;
    const SacAgent backup = agent;
    const auto rollback = [&](const char* what) {
        agent = backup;
        throw FaultError(std::string("sac_update: ") + what);
    };

    // Critics.
    const Eigen::VectorXd y = sac_targets(agent.policy, agent.q1_target, agent.q2_target, b,
                                          standard_normal(a, b.size(), rng), cfg.gamma, agent.alpha());
    Eigen::MatrixXd t(a, b.size());
    for (Eigen::Index j = 0; j < b.size(); ++j) t.col(j) = GaussianPolicy::normalized_action(b.actions.col(j));
    const Eigen::MatrixXd x = critic_input(b.observations, t);
    ValueLoss c1 = value_loss(agent.q1, x, y);
    ValueLoss c2 = value_loss(agent.q2, x, y);
    if (!std::isfinite(c1.loss) || !std::isfinite(c2.loss)) rollback("non-finite critic loss");
    clip_grad_norm(c1.grad, cfg.max_grad_norm);
    clip_grad_norm(c2.grad, cfg.max_grad_norm);
    agent.q1_opt.step(agent.q1.parameters(), c1.grad);
    agent.q2_opt.step(agent.q2.parameters(), c2.grad);

    // Actor.
    ActorLoss al = sac_actor_loss(agent.policy, agent.q1, agent.q2, b.observations, standard_normal(a, b.size(), rng),
                                  agent.alpha());
    if (!std::isfinite(al.loss) || !al.grad.allFinite()) rollback("non-finite actor loss");
    clip_grad_norm(al.grad, cfg.max_grad_norm);
    agent.policy_opt.step(agent.policy.net().parameters(), al.grad);

    // Temperature: minimize -log_alpha * (log pi + target_entropy).
    if (cfg.auto_alpha) {
        Eigen::VectorXd la(1);
        la(0) = agent.log_alpha;
        Eigen::VectorXd g(1);
        g(0) = -(al.mean_log_prob + target_entropy);
        agent.alpha_opt.step(la, g);
        agent.log_alpha = la(0);
    }

    polyak_update(agent.q1_target, agent.q1, cfg.tau);
    polyak_update(agent.q2_target, agent.q2, cfg.tau);
    if (!agent.policy.net().finite() || !agent.q1.finite() || !agent.q2.finite()) rollback("non-finite parameters");

    return {0.5 * (c1.loss + c2.loss), al.loss, agent.alpha(), -al.mean_log_prob};
}

} // namespace avlab::rl
