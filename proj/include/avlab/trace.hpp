#pragma once

#include <vector>

#include "avlab/control.hpp"
#include "avlab/dynamics.hpp"

namespace avlab {

struct RewardComponents {
    double j_t = 0.0; // tracking deviation of the true state
    double j_e = 0.0; // attack energy
    double j_s = 0.0; // stealth bonus alpha * (1 - D_k)

    double reward() const { return j_t - j_e + j_s; }
};

// One environment step. The true state, belief and reference all refer to
// the time instant reached at the end of step k.
struct StepRecord {
    long k = 0;
    VehicleState truth;
    VehicleState reference;
    VehicleState belief;
    ControlInput command;
    AttackSignal attack; // applied (zero outside attack windows)
    bool attack_active = false;
    Measurement measurement;
    Eigen::Vector3d residue = Eigen::Vector3d::Zero();
    double chi2 = 0.0;
    double threshold = 0.0;
    bool detected = false;
    RewardComponents components;
    double reward = 0.0;
};

struct EpisodeTrace {
    std::vector<StepRecord> steps;
};

} // namespace avlab
