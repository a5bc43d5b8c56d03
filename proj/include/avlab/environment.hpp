#pragma once

// The attacker's decision process: closed loop of controller, plant, EKF and
// chi-square detector behind a reset/step interface.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include <Eigen/Dense>

#include "avlab/control.hpp"
#include "avlab/detection.hpp"
#include "avlab/dynamics.hpp"
#include "avlab/errors.hpp"
#include "avlab/estimation.hpp"
#include "avlab/trace.hpp"

namespace avlab {

struct AttackSchedule {
    long period = 100;
    long active_len = 50;
    long offset = 0;

    static AttackSchedule long_preset() { return {100, 50, 0}; }
    static AttackSchedule short_preset() { return {50, 10, 0}; }

    void validate() const {
        if (period < 1) throw ConfigError("schedule.period must be positive");
        if (active_len < 1 || active_len > period) throw ConfigError("schedule.active_len must lie in [1, period]");
        if (offset < 0) throw ConfigError("schedule.offset must be non-negative");
    }

    bool active(long k) const { return k >= offset && (k - offset) % period < active_len; }

    // Position within the current cycle, in [0, 1).
    double phase(long k) const {
        if (k < offset) return 0.0;
        return static_cast<double>((k - offset) % period) / static_cast<double>(period);
    }
};

enum class EnergyTarget { attack, command };

struct RewardWeights {
    Eigen::Matrix3d track = Eigen::Vector3d(1.0, 1.0, 0.1).asDiagonal();
    Eigen::Matrix2d energy = Eigen::Matrix2d::Identity() * 0.01;
    double alpha = 10.0;
    // Energy is charged on d_k by default; `command` charges the executed u_k.
    EnergyTarget energy_on = EnergyTarget::attack;

    void validate() const {
        detail::check_covariance<3>(track, false, "reward.q_track");
        detail::check_covariance<2>(energy, false, "reward.r_energy");
        if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ConfigError("reward.alpha must be positive");
    }
};

// Per-component bound on the injected signal.
struct AttackBox {
    double v_d_max = 1.0;
    double phi_d_max = 0.3;

    AttackSignal clamp(AttackSignal d) const {
        return {std::clamp(d.v_d, -v_d_max, v_d_max), std::clamp(d.phi_d, -phi_d_max, phi_d_max)};
    }

    void validate() const {
        if (!(v_d_max > 0.0) || !(phi_d_max > 0.0) || !std::isfinite(v_d_max) || !std::isfinite(phi_d_max))
            throw ConfigError("attack box bounds must be finite and positive");
    }
};

struct EnvConfig {
    VehicleParams vehicle;
    NoiseModel noise;
    bool noise_enabled = true; // false: truth and sensor are noiseless, the EKF keeps its tuning
    ControllerGains gains;
    double v_floor = kDefaultVFloor;
    CircleTrajectory trajectory;
    DetectorConfig detector;
    AttackSchedule schedule;
    RewardWeights reward;
    AttackBox attack_box;
    long horizon = 500;
    double initial_variance = 0.01;

    void validate() const {
        vehicle.validate();
        noise.validate();
        gains.validate();
        if (!(v_floor > 0.0)) throw ConfigError("controller.v_floor must be positive");
        trajectory.validate();
        detector.validate();
        schedule.validate();
        reward.validate();
        attack_box.validate();
        if (horizon < 1) throw ConfigError("training.horizon must be positive");
        if (!(initial_variance > 0.0)) throw ConfigError("initial_variance must be positive");
    }
};

inline constexpr int kObservationDim = 10;
inline constexpr int kActionDim = 2;

using Observation = Eigen::Matrix<double, kObservationDim, 1>;

struct StepOutcome {
    Observation observation = Observation::Zero();
    double reward = 0.0;
    RewardComponents components;
    bool done = false;
    bool attack_active = false;
    DetectorVerdict verdict;
    VehicleState truth;
};

// SplitMix64 finalizer; derives decorrelated per-episode seeds.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline double tracking_cost(const VehicleState& truth, const VehicleState& ref, const Eigen::Matrix3d& q) {
    const Eigen::Vector3d e(truth.x - ref.x, truth.y - ref.y, wrap_angle(truth.theta - ref.theta));
    return e.dot(q * e);
}

class AttackEnv {
public:
    explicit AttackEnv(EnvConfig config)
        : config_(std::move(config)), noise_(config_.noise, config_.noise.seed), detector_(config_.detector) {
        config_.validate();
    }

    const EnvConfig& config() const { return config_; }
    bool done() const { return k_ >= config_.horizon; }
    long step_index() const { return k_; }
    const EpisodeTrace& trace() const { return trace_; }
    const BeliefState& belief() const { return belief_; }
    const VehicleState& truth() const { return truth_; }

    // Disables the attack channel entirely: no step counts as attacked.
    void set_attacks_enabled(bool enabled) { attacks_enabled_ = enabled; }
    void set_record_trace(bool record) { record_ = record; }

    Observation reset(std::uint64_t seed) {
        noise_.reseed(seed);
        detector_.reset();
        k_ = 0;
        started_ = true;
        const ReferencePoint ref = reference(0);
        truth_ = ref.pose();
        belief_ = BeliefState::initial(truth_, config_.initial_variance);
        last_whitened_.setZero();
        last_flag_ = false;
        trace_.steps.clear();
        if (record_) trace_.steps.reserve(static_cast<std::size_t>(config_.horizon));
        return observe();
    }

    bool attack_active(long k) const { return attacks_enabled_ && config_.schedule.active(k); }

    StepOutcome step(AttackSignal action) {
        if (!started_) throw UsageError("step called before reset");
        if (done()) throw UsageError("step called after the episode finished");
        const EnvConfig& c = config_;

        const ControlInput u = tracking_control(belief_.mean, reference(k_), c.gains, c.vehicle.wheelbase,
                                                c.vehicle.limits, c.v_floor);
        const bool active = attack_active(k_);
        const AttackSignal d = active ? c.attack_box.clamp(action) : AttackSignal{};

        const Eigen::Vector3d w = c.noise_enabled ? noise_.process() : Eigen::Vector3d::Zero();
        truth_ = avlab::step(truth_, u, d, c.vehicle, w);
        const Eigen::Vector2d q = c.noise_enabled ? noise_.measurement() : Eigen::Vector2d::Zero();
        const Measurement z = measure(truth_, c.vehicle.landmark, q, c.vehicle.epsilon_range);

        const BeliefState prior = predict(belief_, u, c.vehicle, c.noise.process);
        const UpdateResult upd = update(prior, z, c.vehicle.landmark, c.noise.measurement, c.vehicle.epsilon_range);
        belief_ = upd.posterior;

        const Residue res = residue(belief_.mean, prior.mean);
        const Eigen::Matrix3d s_r = upd.residue_cov();
        const DetectorVerdict v = detector_.push(chi2_score(res.r, s_r));

        const ReferencePoint ref_next = reference(k_ + 1);
        RewardComponents rc;
        rc.j_t = tracking_cost(truth_, ref_next.pose(), c.reward.track);
        if (active) {
            if (c.reward.energy_on == EnergyTarget::attack) {
                const Eigen::Vector2d dv(d.v_d, d.phi_d);
                rc.j_e = dv.dot(c.reward.energy * dv);
            } else {
                const ControlInput ue = effective_input(u, d, c.vehicle.limits);
                const Eigen::Vector2d uv(ue.v, ue.phi);
                rc.j_e = uv.dot(c.reward.energy * uv);
            }
            rc.j_s = v.flagged ? 0.0 : c.reward.alpha;
        }

        for (int i = 0; i < 3; ++i)
            last_whitened_(i) = res.r(i) / std::sqrt(s_r(i, i) + kResidueRegularization);
        last_flag_ = v.flagged;

        StepOutcome out;
        out.components = rc;
        out.reward = rc.reward();
        out.attack_active = active;
        out.verdict = v;
        out.truth = truth_;

        if (record_) {
            StepRecord rec;
            rec.k = k_;
            rec.truth = truth_;
            rec.reference = ref_next.pose();
            rec.belief = belief_.mean;
            rec.command = u;
            rec.attack = d;
            rec.attack_active = active;
            rec.measurement = z;
            rec.residue = res.r;
            rec.chi2 = v.score;
            rec.threshold = v.threshold;
            rec.detected = v.flagged;
            rec.components = rc;
            rec.reward = out.reward;
            trace_.steps.push_back(rec);
        }

        ++k_;
        out.done = done();
        out.observation = observe();
        return out;
    }

private:
    ReferencePoint reference(long k) const { return circle_reference(k, config_.vehicle.dt, config_.trajectory); }

    Observation observe() const {
        const ReferencePoint ref = reference(k_);
        const TrackingError e = vehicle_frame_error(belief_.mean, ref);
        const double v_scale = config_.vehicle.limits.v_max;
        Observation o;
        o << e.e_x, e.e_y, e.e_theta / kPi, ref.v_r / v_scale, ref.omega_r * config_.vehicle.wheelbase / v_scale,
            last_whitened_(0), last_whitened_(1), last_whitened_(2), last_flag_ ? 1.0 : 0.0,
            attacks_enabled_ ? config_.schedule.phase(k_) : 0.0;
        return o.cwiseMax(-10.0).cwiseMin(10.0);
    }

    EnvConfig config_;
    NoiseSource noise_;
    ChiSquareDetector detector_;
    VehicleState truth_;
    BeliefState belief_;
    Eigen::Vector3d last_whitened_ = Eigen::Vector3d::Zero();
    bool last_flag_ = false;
    long k_ = 0;
    bool started_ = false;
    bool attacks_enabled_ = true;
    bool record_ = true;
    EpisodeTrace trace_;
};

// Mean per-step reward over the attacked steps of a trace.
inline double objective(const EpisodeTrace& trace) {
    double sum = 0.0;
    long n = 0;
    for (const auto& s : trace.steps) {
        if (!s.attack_active) continue;
        sum += s.components.j_t - s.components.j_e + s.components.j_s;
        ++n;
    }
    if (n == 0) throw UsageError("objective: trace has no attacked steps");
    return sum / static_cast<double>(n);
}

} // namespace avlab
