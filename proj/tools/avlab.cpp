// avlab command-line entry point: train, eval, baseline, plot.
//
// Exit codes: 0 success, 2 configuration or input error, 3 numerical or
// training fault, 4 I/O failure.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "avlab/config.hpp"
#include "avlab/errors.hpp"
#include "avlab/metrics.hpp"
#include "avlab/plot.hpp"
#include "avlab/rl/checkpoint.hpp"
#include "avlab/rl/train.hpp"
#include "avlab/trace_io.hpp"

namespace {

enum Exit { kOk = 0, kConfig = 2, kFault = 3, kIo = 4 };

void setup_logging() {
    auto logger = spdlog::stderr_color_mt("avlab");
    logger->set_pattern("[%l] %v");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::info);
    if (const char* env = std::getenv("AVLAB_LOG")) {
        const std::string v = env;
        if (v == "error") {
            spdlog::set_level(spdlog::level::err);
        } else if (v == "debug") {
            spdlog::set_level(spdlog::level::debug);
        } else if (v != "info") {
            spdlog::warn("AVLAB_LOG='{}' not recognized; using info", v);
        }
    }
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw avlab::IoError("cannot open for writing: " + path);
    os << text;
    if (!os) throw avlab::IoError("failed writing: " + path);
}

std::string reward_curve_csv(const std::vector<double>& rewards) {
    std::string out = "episode,reward\n";
    char buf[64];
    for (std::size_t i = 0; i < rewards.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g\n", i, rewards[i]);
        out += buf;
    }
    return out;
}

struct TrainArgs {
    std::string config, algo = "ppo", out, curve;
    std::uint64_t seed = 1;
};

int cmd_train(const TrainArgs& a) {
    const avlab::RunConfig rc = avlab::load_config(a.config);
    const auto algo = avlab::rl::parse_algorithm(a.algo);
    spdlog::info("config {} hash {}", a.config, avlab::format_hash(rc.hash));
    spdlog::info("training {} for {} episodes, seed {}", a.algo, rc.trainer.episodes, a.seed);

    const auto result = avlab::rl::train(rc.env, algo, rc.trainer, a.seed, [](int ep, double r) {
        spdlog::debug("episode {} reward {:.6g}", ep, r);
    });
    if (result.best_episode >= 0)
        spdlog::info("best trailing-5 mean {:.6g} at episode {}", result.best_trailing_mean, result.best_episode);

    avlab::rl::save_checkpoint(a.out, {std::string(avlab::rl::to_string(algo)), a.seed, rc.hash, result.policy});
    const std::string curve = a.curve.empty() ? a.out + ".curve.csv" : a.curve;
    write_text(curve, reward_curve_csv(result.episode_rewards));
    spdlog::info("wrote checkpoint {} and reward curve {}", a.out, curve);
    return kOk;
}

struct EvalArgs {
    std::string config, policy, scenario, trace, report;
    int episodes = 10;
    int jobs = 1;
    bool stochastic = false;
    std::uint64_t seed = 0;
};

void check_compatible(const avlab::rl::PolicyCheckpoint& ck, const avlab::RunConfig& rc) {
    const auto& p = ck.policy;
    if (p.observation_dim() != avlab::kObservationDim || p.action_dim() != avlab::kActionDim)
        throw avlab::ConfigError("checkpoint dimensions do not match the environment");
    if (!p.action_scale().isApprox(avlab::rl::action_scale_of(rc.env), 1e-12))
        throw avlab::ConfigError("checkpoint action bounds do not match attack.v_d_max / attack.phi_d_max");
    const auto& dims = p.net().dims();
    const std::vector<int> hidden(dims.begin() + 1, dims.end() - 1);
    if (hidden != rc.trainer.hidden) throw avlab::ConfigError("checkpoint hidden layers do not match training.hidden");
    if (ck.config_hash != rc.hash)
        spdlog::warn("checkpoint was trained with config hash {}, evaluating with {}",
                     avlab::format_hash(ck.config_hash), avlab::format_hash(rc.hash));
}

int cmd_eval(const EvalArgs& a) {
    if (a.episodes < 1) throw avlab::ConfigError("--episodes must be at least 1");
    avlab::RunConfig rc = avlab::load_config(a.config);
    if (!a.scenario.empty()) {
        avlab::apply_scenario(rc.env, a.scenario);
        rc.scenario = a.scenario;
    }
    const auto ck = avlab::rl::load_checkpoint(a.policy);
    check_compatible(ck, rc);
    spdlog::info("evaluating {} policy on scenario {} for {} episodes", ck.algorithm, rc.scenario, a.episodes);

    const auto traces = avlab::rl::evaluate(rc.env, ck.policy, {a.episodes, a.stochastic, a.seed, a.jobs});
    const auto baseline = avlab::rl::run_baseline(rc.env, a.episodes, a.seed, a.jobs);

    auto report = avlab::EvalReport::from(traces);
    report.seed = a.seed;
    report.config_hash = rc.hash;
    report.scenario = rc.scenario;
    report.algorithm = ck.algorithm;
    report.baseline_tracking_cost = avlab::mean_tracking_cost(baseline);
    report.baseline_flag_rate = avlab::flag_rate(baseline);
    const std::string text = report.to_text();
    if (!a.report.empty()) write_text(a.report, text);
    if (!a.trace.empty()) avlab::write_trace_csv(a.trace, traces.front());
    std::fputs(text.c_str(), stdout);
    return kOk;
}

struct BaselineArgs {
    std::string config, report;
    int episodes = 10;
    int jobs = 1;
    std::uint64_t seed = 0;
};

int cmd_baseline(const BaselineArgs& a) {
    if (a.episodes < 1) throw avlab::ConfigError("--episodes must be at least 1");
    const avlab::RunConfig rc = avlab::load_config(a.config);
    const auto traces = avlab::rl::run_baseline(rc.env, a.episodes, a.seed, a.jobs);
    const auto counts = avlab::count_detections(traces);
    char buf[512];
    std::snprintf(buf, sizeof buf,
                  "episodes %d\nsteps %ld\nseed %llu\nconfig_hash %s\nflag_rate %.10g\ntracking_cost %.10g\n"
                  "false_alarm_rate %.10g\n",
                  a.episodes, counts.total(), static_cast<unsigned long long>(a.seed),
                  avlab::format_hash(rc.hash).c_str(), avlab::flag_rate(traces), avlab::mean_tracking_cost(traces),
                  rc.env.detector.false_alarm_rate);
    if (!a.report.empty()) write_text(a.report, buf);
    std::fputs(buf, stdout);
    return kOk;
}

int cmd_plot(const std::string& trace_path, const std::string& out) {
    const auto trace = avlab::read_trace_csv(trace_path);
    avlab::write_plot_svg(out, trace);
    spdlog::info("wrote {}", out);
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    setup_logging();

    CLI::App app{"Stealthy actuator false-data-injection attack lab"};
    app.require_subcommand(1);

    TrainArgs ta;
    auto* train = app.add_subcommand("train", "Train an attack policy and write a checkpoint");
    train->add_option("--config", ta.config, "TOML configuration file")->required();
    train->add_option("--algo", ta.algo, "ppo or sac")->check(CLI::IsMember({"ppo", "sac"}));
    train->add_option("--out", ta.out, "Checkpoint output path")->required();
    train->add_option("--seed", ta.seed, "Training seed");
    train->add_option("--curve", ta.curve, "Reward-curve CSV path (default: <out>.curve.csv)");

    EvalArgs ea;
    auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint and write a report");
    eval->add_option("--config", ea.config, "TOML configuration file")->required();
    eval->add_option("--policy", ea.policy, "Checkpoint path")->required();
    eval->add_option("--episodes", ea.episodes, "Number of evaluation episodes");
    eval->add_option("--scenario", ea.scenario, "long or short (default: the configured schedule)");
    eval->add_option("--trace", ea.trace, "CSV trace of the first episode");
    eval->add_option("--report", ea.report, "Report output path");
    eval->add_flag("--stochastic", ea.stochastic, "Sample actions instead of using the policy mean");
    eval->add_option("--jobs", ea.jobs, "Parallel episodes")->check(CLI::PositiveNumber);
    eval->add_option("--seed", ea.seed, "Evaluation seed");

    BaselineArgs ba;
    auto* baseline = app.add_subcommand("baseline", "Closed loop without attacks: flag rate and tracking cost");
    baseline->add_option("--config", ba.config, "TOML configuration file")->required();
    baseline->add_option("--episodes", ba.episodes, "Number of episodes");
    baseline->add_option("--report", ba.report, "Report output path");
    baseline->add_option("--jobs", ba.jobs, "Parallel episodes")->check(CLI::PositiveNumber);
    baseline->add_option("--seed", ba.seed, "Seed");

    std::string plot_trace, plot_out;
    auto* plot = app.add_subcommand("plot", "Render a trace CSV as SVG");
    plot->add_option("--trace", plot_trace, "Trace CSV")->required();
    plot->add_option("--out", plot_out, "SVG output path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfig;
    }

    try {
        if (*train) return cmd_train(ta);
        if (*eval) return cmd_eval(ea);
        if (*baseline) return cmd_baseline(ba);
        return cmd_plot(plot_trace, plot_out);
    } catch (const avlab::ConfigError& e) {
        spdlog::error("{}", e.what());
        return kConfig;
    } catch (const avlab::ParseError& e) {
        spdlog::error("{}", e.what());
        return kConfig;
    } catch (const avlab::FaultError& e) {
        spdlog::error("fault: {}", e.what());
        return kFault;
    } catch (const avlab::IoError& e) {
        spdlog::error("{}", e.what());
        return kIo;
    } catch (const avlab::UsageError& e) {
        spdlog::error("{}", e.what());
        return kConfig;
    }
}
