#pragma once

// Episode loops: PPO/SAC training against AttackEnv, policy evaluation and
// the no-attack baseline.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <future>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "avlab/environment.hpp"
#include "avlab/errors.hpp"
#include "avlab/rl/gae.hpp"
#include "avlab/rl/mlp.hpp"
#include "avlab/rl/optim.hpp"
#include "avlab/rl/policy.hpp"
#include "avlab/rl/ppo.hpp"
#include "avlab/rl/sac.hpp"

namespace avlab::rl {

enum class Algorithm { ppo, sac };

inline std::string_view to_string(Algorithm a) { return a == Algorithm::ppo ? "ppo" : "sac"; }

inline Algorithm parse_algorithm(std::string_view s) {
    if (s == "ppo") return Algorithm::ppo;
    if (s == "sac") return Algorithm::sac;
    throw ConfigError("unknown algorithm '" + std::string(s) + "' (expected ppo or sac)");
}

struct TrainerConfig {
    PpoConfig ppo;
    SacConfig sac;
    int episodes = 50;
    std::vector<int> hidden{64, 64};
    // Learner-side reward multiplier; reported episode rewards stay raw.
    double reward_scale = 0.01;
    double initial_log_std = -0.5;

    void validate() const {
        ppo.validate();
        sac.validate();
        if (episodes < 0) throw ConfigError("training.episodes must be non-negative");
        if (hidden.empty()) throw ConfigError("training.hidden must list at least one layer");
        for (int h : hidden)
            if (h < 1) throw ConfigError("training.hidden layer sizes must be positive");
        if (!(reward_scale > 0.0)) throw ConfigError("training.reward_scale must be positive");
        if (!(initial_log_std >= kLogStdMin && initial_log_std <= kLogStdMax))
            throw ConfigError("training.initial_log_std must lie in [-5, 2]");
    }
};

struct TrainResult {
    Algorithm algorithm = Algorithm::ppo;
    GaussianPolicy policy;            // best by trailing-5-episode mean
    GaussianPolicy final_policy;      // parameters after the last episode
    std::vector<double> episode_rewards;
    int best_episode = -1;
    double best_trailing_mean = -std::numeric_limits<double>::infinity();
    std::vector<PpoDiagnostics> ppo_updates;
    std::vector<SacDiagnostics> sac_updates; // one entry per episode (last update)
};

using ProgressFn = std::function<void(int episode, double episode_reward)>;

inline Eigen::VectorXd action_scale_of(const EnvConfig& env) {
    return Eigen::Vector2d(env.attack_box.v_d_max, env.attack_box.phi_d_max);
}

inline std::uint64_t training_episode_seed(const EnvConfig& env, std::uint64_t seed, int episode) {
    return mix_seed(mix_seed(env.noise.seed, seed), static_cast<std::uint64_t>(episode));
}

inline std::uint64_t eval_episode_seed(const EnvConfig& env, std::uint64_t seed, int episode) {
    return mix_seed(mix_seed(env.noise.seed, seed ^ 0x5eed5eed5eedULL), static_cast<std::uint64_t>(episode));
}

inline AttackSignal to_attack(const Eigen::VectorXd& a) { return {a(0), a(1)}; }

namespace detail {

class BestTracker {
public:
    explicit BestTracker(int episodes) : window_(std::min(5, std::max(episodes, 1))) {}

    void record(TrainResult& r, const GaussianPolicy& current) {
        const auto n = static_cast<int>(r.episode_rewards.size());
        if (n < window_) return;
        const double trailing =
            std::accumulate(r.episode_rewards.end() - window_, r.episode_rewards.end(), 0.0) / window_;
        if (trailing > r.best_trailing_mean) {
            r.best_trailing_mean = trailing;
            r.best_episode = n - 1;
            r.policy = current;
        }
    }

private:
    int window_;
};

inline Mlp make_value_net(int obs_dim, const std::vector<int>& hidden, std::mt19937_64& rng) {
    std::vector<int> dims{obs_dim};
    dims.insert(dims.end(), hidden.begin(), hidden.end());
    dims.push_back(1);
    Mlp v(dims);
    v.initialize(rng);
    return v;
}

inline TrainResult train_ppo(const EnvConfig& env_cfg, const TrainerConfig& cfg, std::uint64_t seed,
                             const ProgressFn& progress) {
    std::mt19937_64 rng(mix_seed(seed, 0x9e0));
    TrainResult result;
    result.algorithm = Algorithm::ppo;
    GaussianPolicy policy(kObservationDim, cfg.hidden, action_scale_of(env_cfg));
    policy.initialize(rng, cfg.initial_log_std);
    Mlp value = make_value_net(kObservationDim, cfg.hidden, rng);
    Adam policy_opt(policy.net().parameter_count(), cfg.ppo.learning_rate);
    Adam value_opt(value.parameter_count(), cfg.ppo.learning_rate);
    result.policy = policy;

    AttackEnv env(env_cfg);
    env.set_record_trace(false);
    BestTracker best(cfg.episodes);

    const auto cap = static_cast<std::size_t>(cfg.ppo.batch_size);
    std::vector<Eigen::VectorXd> obs_buf, act_buf;
    std::vector<double> logp_buf, rew_buf, val_buf;
    std::vector<std::uint8_t> done_buf;

    const auto flush = [&](const Eigen::VectorXd& next_obs, bool next_terminal) {
        const auto n = static_cast<Eigen::Index>(obs_buf.size());
        if (n < 2) return;
        std::vector<double> values = val_buf;
        values.push_back(next_terminal ? 0.0 : value.forward(Eigen::MatrixXd(next_obs))(0, 0));
        AdvantageEstimate est = gae(rew_buf, values, done_buf, cfg.ppo.gamma, cfg.ppo.gae_lambda);
        RolloutBatch batch{Eigen::MatrixXd(kObservationDim, n), Eigen::MatrixXd(policy.action_dim(), n),
                           Eigen::VectorXd(n), std::move(est.advantages), std::move(est.returns)};
        for (Eigen::Index j = 0; j < n; ++j) {
            batch.observations.col(j) = obs_buf[static_cast<std::size_t>(j)];
            batch.actions.col(j) = act_buf[static_cast<std::size_t>(j)];
            batch.log_probs(j) = logp_buf[static_cast<std::size_t>(j)];
        }
        result.ppo_updates.push_back(ppo_update(policy, value, policy_opt, value_opt, std::move(batch), cfg.ppo, rng));
        obs_buf.clear();
        act_buf.clear();
        logp_buf.clear();
        rew_buf.clear();
        val_buf.clear();
        done_buf.clear();
    };

    Eigen::VectorXd obs;
    bool last_done = true;
    for (int ep = 0; ep < cfg.episodes; ++ep) {
        obs = env.reset(training_episode_seed(env_cfg, seed, ep));
        double total = 0.0;
        while (!env.done()) {
            const GaussianPolicy::Sample s = policy.sample(obs, rng);
            const double v = value.forward(Eigen::MatrixXd(obs))(0, 0);
            const StepOutcome out = env.step(to_attack(s.action));
            total += out.reward;
            obs_buf.push_back(obs);
            act_buf.push_back(s.pre_squash);
            logp_buf.push_back(s.log_prob);
            rew_buf.push_back(out.reward * cfg.reward_scale);
            val_buf.push_back(v);
            done_buf.push_back(out.done ? 1 : 0);
            obs = out.observation;
            last_done = out.done;
            if (obs_buf.size() >= cap) flush(obs, out.done);
        }
        result.episode_rewards.push_back(total);
        best.record(result, policy);
        if (progress) progress(ep, total);
    }
    if (obs_buf.size() >= static_cast<std::size_t>(cfg.ppo.minibatch_size)) flush(obs, last_done);
    result.final_policy = policy;
    return result;
}

inline TrainResult train_sac(const EnvConfig& env_cfg, const TrainerConfig& cfg, std::uint64_t seed,
                             const ProgressFn& progress) {
    std::mt19937_64 rng(mix_seed(seed, 0x5ac));
    TrainResult result;
    result.algorithm = Algorithm::sac;
    SacAgent agent(kObservationDim, cfg.hidden, action_scale_of(env_cfg), cfg.sac, rng, cfg.initial_log_std);
    result.policy = agent.policy;
    ReplayBuffer replay(cfg.sac.replay_capacity);

    AttackEnv env(env_cfg);
    env.set_record_trace(false);
    BestTracker best(cfg.episodes);
    std::uniform_real_distribution<double> uniform(-1.0, 1.0);
    long steps = 0;

    for (int ep = 0; ep < cfg.episodes; ++ep) {
        Eigen::VectorXd obs = env.reset(training_episode_seed(env_cfg, seed, ep));
        double total = 0.0;
        SacDiagnostics last{};
        while (!env.done()) {
            Eigen::VectorXd u(agent.policy.action_dim());
            if (steps < cfg.sac.warmup_steps) {
                for (Eigen::Index i = 0; i < u.size(); ++i) u(i) = std::atanh(0.999 * uniform(rng));
            } else {
                u = agent.policy.sample(obs, rng).pre_squash;
            }
            const StepOutcome out = env.step(to_attack(agent.policy.squash(u)));
            total += out.reward;
            replay.push({obs, u, out.reward * cfg.reward_scale, out.observation, out.done, 0.0});
            obs = out.observation;
            ++steps;
            if (steps >= cfg.sac.warmup_steps && replay.size() >= static_cast<std::size_t>(cfg.sac.batch_size)) {
                for (int i = 0; i < cfg.sac.updates_per_step; ++i) {
                    const auto idx = replay.sample_indices(static_cast<std::size_t>(cfg.sac.batch_size), rng);
                    last = sac_update(agent, SacBatch::gather(replay, idx), cfg.sac, rng);
                }
            }
        }
        result.sac_updates.push_back(last);
        result.episode_rewards.push_back(total);
        best.record(result, agent.policy);
        if (progress) progress(ep, total);
    }
    result.final_policy = agent.policy;
    return result;
}

} // namespace detail

inline TrainResult train(const EnvConfig& env, Algorithm algo, const TrainerConfig& cfg, std::uint64_t seed,
                         const ProgressFn& progress = {}) {
    env.validate();
    cfg.validate();
    return algo == Algorithm::ppo ? detail::train_ppo(env, cfg, seed, progress)
                                  : detail::train_sac(env, cfg, seed, progress);
}

struct EvalOptions {
    int episodes = 1;
    bool stochastic = false; // sample actions instead of using the policy mean
    std::uint64_t seed = 0;
    int jobs = 1;
};

namespace detail {

template <class EpisodeFn>
std::vector<EpisodeTrace> run_episodes(int episodes, int jobs, EpisodeFn fn) {
    std::vector<EpisodeTrace> traces(static_cast<std::size_t>(episodes));
    jobs = std::max(1, std::min(jobs, episodes));
    if (jobs == 1) {
        for (int i = 0; i < episodes; ++i) traces[static_cast<std::size_t>(i)] = fn(i);
        return traces;
    }
    // Episodes are independent; results land at their episode index.
    std::vector<std::future<void>> workers;
    for (int w = 0; w < jobs; ++w) {
        workers.push_back(std::async(std::launch::async, [&, w] {
            for (int i = w; i < episodes; i += jobs) traces[static_cast<std::size_t>(i)] = fn(i);
        }));
    }
    for (auto& f : workers) f.get();
    return traces;
}

} // namespace detail

inline std::vector<EpisodeTrace> evaluate(const EnvConfig& env_cfg, const GaussianPolicy& policy,
                                          const EvalOptions& opt) {
    if (opt.episodes < 1) throw ConfigError("evaluate: at least one episode is required");
    if (policy.observation_dim() != kObservationDim || policy.action_dim() != kActionDim)
        throw ConfigError("evaluate: policy dimensions do not match the environment");
    env_cfg.validate();
    return detail::run_episodes(opt.episodes, opt.jobs, [&](int i) {
        AttackEnv env(env_cfg);
        std::mt19937_64 rng(mix_seed(opt.seed, static_cast<std::uint64_t>(i) + 77));
        Eigen::VectorXd obs = env.reset(eval_episode_seed(env_cfg, opt.seed, i));
        while (!env.done()) {
            const Eigen::VectorXd a = opt.stochastic ? policy.sample(obs, rng).action : policy.mean_action(obs);
            obs = env.step(to_attack(a)).observation;
        }
        return env.trace();
    });
}

// Closed loop with the attack channel disabled (d = 0, no attacked steps).
inline std::vector<EpisodeTrace> run_baseline(const EnvConfig& env_cfg, int episodes, std::uint64_t seed,
                                              int jobs = 1) {
    if (episodes < 1) throw ConfigError("baseline: at least one episode is required");
    env_cfg.validate();
    return detail::run_episodes(episodes, jobs, [&](int i) {
        AttackEnv env(env_cfg);
        env.set_attacks_enabled(false);
        env.reset(eval_episode_seed(env_cfg, seed, i));
        while (!env.done()) env.step({});
        return env.trace();
    });
}

} // namespace avlab::rl
