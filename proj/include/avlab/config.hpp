#pragma once

// TOML run configuration. Every key is optional and falls back to the
// documented module default; unknown sections or keys are rejected.

#include <cstdint>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <toml.hpp>

#include "avlab/environment.hpp"
#include "avlab/errors.hpp"
#include "avlab/rl/train.hpp"

namespace avlab {

// FNV-1a, 64 bit.
inline std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

struct RunConfig {
    EnvConfig env;
    rl::TrainerConfig trainer;
    std::vector<std::uint64_t> seeds{1, 2, 3};
    std::string scenario = "long"; // long | short | custom
    std::uint64_t hash = fnv1a64("");
};

inline void apply_scenario(EnvConfig& env, std::string_view scenario) {
    if (scenario == "long") {
        env.schedule = AttackSchedule::long_preset();
    } else if (scenario == "short") {
        env.schedule = AttackSchedule::short_preset();
    } else {
        throw ConfigError("unknown scenario '" + std::string(scenario) + "' (expected long or short)");
    }
}

namespace detail {

class Section {
public:
    Section(const toml::table* table, std::string name) : table_(table), name_(std::move(name)) {}

    template <class T>
    void read(std::string_view key, T& out) {
        const toml::node* n = find(key);
        if (!n) return;
        if constexpr (std::is_same_v<T, bool>) {
            if (!n->is_boolean()) fail(key, "expected a boolean");
            out = n->as_boolean()->get();
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!n->is_string()) fail(key, "expected a string");
            out = n->as_string()->get();
        } else if constexpr (std::is_floating_point_v<T>) {
            out = number(*n, key);
        } else {
            if (!n->is_integer()) fail(key, "expected an integer");
            const std::int64_t v = n->as_integer()->get();
            if constexpr (std::is_unsigned_v<T>) {
                if (v < 0) fail(key, "expected a non-negative integer");
            }
            out = static_cast<T>(v);
        }
    }

    // Accepts a length-N array (diagonal) or an N x N nested array.
    template <int N>
    void read_matrix(std::string_view key, Eigen::Matrix<double, N, N>& out) {
        const toml::node* n = find(key);
        if (!n) return;
        const toml::array* arr = n->as_array();
        if (!arr || arr->size() != N) fail(key, "expected " + std::to_string(N) + " diagonal entries or an " +
                                                    std::to_string(N) + "x" + std::to_string(N) + " matrix");
        if ((*arr)[0].is_array()) {
            for (int i = 0; i < N; ++i) {
                const toml::array* row = (*arr)[static_cast<std::size_t>(i)].as_array();
                if (!row || row->size() != N) fail(key, "matrix rows must have " + std::to_string(N) + " entries");
                for (int j = 0; j < N; ++j) out(i, j) = number((*row)[static_cast<std::size_t>(j)], key);
            }
        } else {
            out.setZero();
            for (int i = 0; i < N; ++i) out(i, i) = number((*arr)[static_cast<std::size_t>(i)], key);
        }
    }

    void read_position(std::string_view key, Position& out) {
        const toml::node* n = find(key);
        if (!n) return;
        const toml::array* arr = n->as_array();
        if (!arr || arr->size() != 2) fail(key, "expected [x, y]");
        out = {number((*arr)[0], key), number((*arr)[1], key)};
    }

    template <class T>
    void read_list(std::string_view key, std::vector<T>& out) {
        const toml::node* n = find(key);
        if (!n) return;
        const toml::array* arr = n->as_array();
        if (!arr) fail(key, "expected an array of integers");
        out.clear();
        for (const auto& e : *arr) {
            if (!e.is_integer() || e.as_integer()->get() < 0) fail(key, "expected non-negative integers");
            out.push_back(static_cast<T>(e.as_integer()->get()));
        }
    }

    void finish() const {
        if (!table_) return;
        for (const auto& [k, v] : *table_) {
            if (!used_.contains(std::string(k.str()))) throw ConfigError("unknown key '" + name_ + "." + std::string(k.str()) + "'");
        }
    }

private:
    const toml::node* find(std::string_view key) {
        used_.insert(std::string(key));
        return table_ ? table_->get(key) : nullptr;
    }

    double number(const toml::node& n, std::string_view key) const {
        if (n.is_floating_point()) return n.as_floating_point()->get();
        if (n.is_integer()) return static_cast<double>(n.as_integer()->get());
        fail(key, "expected a number");
    }

    [[noreturn]] void fail(std::string_view key, const std::string& what) const {
        throw ConfigError(name_ + "." + std::string(key) + ": " + what);
    }

    const toml::table* table_;
    std::string name_;
    std::set<std::string> used_;
};

} // namespace detail

inline RunConfig parse_config(std::string_view text, std::string_view origin = "<config>") {
    toml::table root;
    try {
        root = toml::parse(text, origin);
    } catch (const toml::parse_error& e) {
        std::ostringstream os;
        os << origin << ": " << e.description() << " (line " << e.source().begin.line << ")";
        throw ConfigError(os.str());
    }

    static const std::set<std::string> sections{"vehicle", "noise",  "controller", "estimator", "detector", "schedule",
                                                "reward",  "attack", "ppo",        "sac",       "training"};
    for (const auto& [k, v] : root) {
        if (!sections.contains(std::string(k.str()))) throw ConfigError("unknown section '" + std::string(k.str()) + "'");
        if (!v.is_table()) throw ConfigError("'" + std::string(k.str()) + "' must be a table");
    }
    const auto section = [&](const char* name) { return detail::Section(root[name].as_table(), name); };

    RunConfig rc;
    rc.hash = fnv1a64(text);
    EnvConfig& env = rc.env;

    auto vehicle = section("vehicle");
    vehicle.read("dt", env.vehicle.dt);
    vehicle.read("wheelbase", env.vehicle.wheelbase);
    vehicle.read("v_max", env.vehicle.limits.v_max);
    vehicle.read("phi_max", env.vehicle.limits.phi_max);
    vehicle.read_position("landmark", env.vehicle.landmark);
    vehicle.read("epsilon_range", env.vehicle.epsilon_range);
    vehicle.finish();

    auto noise = section("noise");
    noise.read_matrix<3>("process", env.noise.process);
    noise.read_matrix<2>("measurement", env.noise.measurement);
    noise.read("seed", env.noise.seed);
    noise.read("enabled", env.noise_enabled);
    noise.finish();

    auto controller = section("controller");
    controller.read("k_x", env.gains.k_x);
    controller.read("k_y", env.gains.k_y);
    controller.read("k_theta", env.gains.k_theta);
    controller.read("v_floor", env.v_floor);
    controller.read("radius", env.trajectory.radius);
    controller.read("speed", env.trajectory.speed);
    controller.read_position("center", env.trajectory.center);
    controller.finish();

    auto estimator = section("estimator");
    estimator.read("initial_variance", env.initial_variance);
    estimator.finish();

    auto detector = section("detector");
    detector.read("false_alarm_rate", env.detector.false_alarm_rate);
    detector.read("window", env.detector.window);
    detector.read("dof", env.detector.dof);
    detector.finish();

    auto schedule = section("schedule");
    std::string preset = "long";
    schedule.read("preset", preset);
    if (preset != "long" && preset != "short" && preset != "custom")
        throw ConfigError("schedule.preset: expected long, short or custom");
    if (preset != "custom") apply_scenario(env, preset);
    const AttackSchedule before = env.schedule;
    schedule.read("period", env.schedule.period);
    schedule.read("active_len", env.schedule.active_len);
    schedule.read("offset", env.schedule.offset);
    schedule.finish();
    const bool overridden = before.period != env.schedule.period || before.active_len != env.schedule.active_len ||
                            before.offset != env.schedule.offset;
    rc.scenario = overridden ? "custom" : preset;

    auto reward = section("reward");
    reward.read_matrix<3>("q_track", env.reward.track);
    reward.read_matrix<2>("r_energy", env.reward.energy);
    reward.read("alpha", env.reward.alpha);
    std::string energy_on = "d";
    reward.read("energy_on", energy_on);
    if (energy_on == "d") {
        env.reward.energy_on = EnergyTarget::attack;
    } else if (energy_on == "u") {
        env.reward.energy_on = EnergyTarget::command;
    } else {
        throw ConfigError("reward.energy_on: expected \"d\" or \"u\"");
    }
    reward.finish();

    auto attack = section("attack");
    attack.read("v_d_max", env.attack_box.v_d_max);
    attack.read("phi_d_max", env.attack_box.phi_d_max);
    attack.finish();

    rl::TrainerConfig& tc = rc.trainer;
    auto ppo = section("ppo");
    ppo.read("gamma", tc.ppo.gamma);
    ppo.read("gae_lambda", tc.ppo.gae_lambda);
    ppo.read("clip_epsilon", tc.ppo.clip_epsilon);
    ppo.read("learning_rate", tc.ppo.learning_rate);
    ppo.read("epochs_per_batch", tc.ppo.epochs_per_batch);
    ppo.read("batch_size", tc.ppo.batch_size);
    ppo.read("minibatch_size", tc.ppo.minibatch_size);
    ppo.read("entropy_coef", tc.ppo.entropy_coef);
    ppo.read("max_grad_norm", tc.ppo.max_grad_norm);
    ppo.finish();

    auto sac = section("sac");
    sac.read("gamma", tc.sac.gamma);
    sac.read("tau", tc.sac.tau);
    sac.read("learning_rate", tc.sac.learning_rate);
    sac.read("batch_size", tc.sac.batch_size);
    sac.read("replay_capacity", tc.sac.replay_capacity);
    sac.read("warmup_steps", tc.sac.warmup_steps);
    sac.read("updates_per_step", tc.sac.updates_per_step);
    sac.read("entropy_alpha", tc.sac.initial_alpha);
    sac.read("auto_entropy", tc.sac.auto_alpha);
    sac.read("target_entropy", tc.sac.target_entropy);
    sac.read("max_grad_norm", tc.sac.max_grad_norm);
    sac.finish();

    auto training = section("training");
    training.read("episodes", tc.episodes);
    training.read("horizon", env.horizon);
    training.read_list("seeds", rc.seeds);
    training.read_list("hidden", tc.hidden);
    training.read("reward_scale", tc.reward_scale);
    training.read("initial_log_std", tc.initial_log_std);
    training.finish();

    env.validate();
    tc.validate();
    if (rc.seeds.empty()) throw ConfigError("training.seeds must not be empty");
    return rc;
}

inline std::string read_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("cannot read config file: " + path);
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

inline RunConfig load_config(const std::string& path) { return parse_config(read_file(path), path); }

} // namespace avlab
