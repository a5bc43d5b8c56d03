#pragma once

// Detector recall, attack energy and tracking error over attacked steps.

#include <cstdint>
#include <iomanip>
#include <span>
#include <sstream>
#include <string>

#include "avlab/errors.hpp"
#include "avlab/trace.hpp"

namespace avlab {

struct DetectionCounts {
    long true_positives = 0;  // attacked and flagged
    long false_negatives = 0; // attacked and missed
    long false_positives = 0; // not attacked but flagged
    long true_negatives = 0;

    long attacked() const { return true_positives + false_negatives; }
    long total() const { return attacked() + false_positives + true_negatives; }
};

inline DetectionCounts count_detections(std::span<const EpisodeTrace> traces) {
    DetectionCounts c;
    for (const auto& t : traces) {
        for (const auto& s : t.steps) {
            if (s.attack_active) {
                (s.detected ? c.true_positives : c.false_negatives) += 1;
            } else {
                (s.detected ? c.false_positives : c.true_negatives) += 1;
            }
        }
    }
    return c;
}

inline double recall(std::span<const EpisodeTrace> traces) {
    const DetectionCounts c = count_detections(traces);
    if (c.attacked() == 0) throw UsageError("recall: no attacked steps");
    return static_cast<double>(c.true_positives) / static_cast<double>(c.attacked());
}

namespace detail {

template <class Field>
double mean_over_attacked(std::span<const EpisodeTrace> traces, Field field, const char* name) {
    double sum = 0.0;
    long n = 0;
    for (const auto& t : traces) {
        for (const auto& s : t.steps) {
            if (!s.attack_active) continue;
            sum += field(s);
            ++n;
        }
    }
    if (n == 0) throw UsageError(std::string(name) + ": no attacked steps");
    return sum / static_cast<double>(n);
}

} // namespace detail

inline double mean_energy(std::span<const EpisodeTrace> traces) {
    return detail::mean_over_attacked(traces, [](const StepRecord& s) { return s.components.j_e; }, "mean_energy");
}

inline double mean_tracking_error(std::span<const EpisodeTrace> traces) {
    return detail::mean_over_attacked(traces, [](const StepRecord& s) { return s.components.j_t; },
                                      "mean_tracking_error");
}

// Fraction of all steps flagged by the detector.
inline double flag_rate(std::span<const EpisodeTrace> traces) {
    const DetectionCounts c = count_detections(traces);
    if (c.total() == 0) throw UsageError("flag_rate: empty traces");
    return static_cast<double>(c.true_positives + c.false_positives) / static_cast<double>(c.total());
}

// Mean J_t over every step, attacked or not.
inline double mean_tracking_cost(std::span<const EpisodeTrace> traces) {
    double sum = 0.0;
    long n = 0;
    for (const auto& t : traces)
        for (const auto& s : t.steps) {
            sum += s.components.j_t;
            ++n;
        }
    if (n == 0) throw UsageError("mean_tracking_cost: empty traces");
    return sum / static_cast<double>(n);
}

inline std::string format_hash(std::uint64_t h) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

struct EvalReport {
    double recall = 0.0;
    double energy = 0.0;
    double tracking_error = 0.0;
    int episodes = 0;
    std::uint64_t seed = 0;
    std::uint64_t config_hash = 0;
    std::string scenario;
    std::string algorithm;
    double baseline_tracking_cost = 0.0;
    double baseline_flag_rate = 0.0;

    static EvalReport from(std::span<const EpisodeTrace> traces) {
        EvalReport r;
        r.recall = avlab::recall(traces);
        r.energy = mean_energy(traces);
        r.tracking_error = mean_tracking_error(traces);
        r.episodes = static_cast<int>(traces.size());
        return r;
    }

    std::string to_text() const {
        std::ostringstream os;
        os << std::setprecision(10);
        os << "scenario " << scenario << "\n"
           << "algorithm " << algorithm << "\n"
           << "episodes " << episodes << "\n"
           << "seed " << seed << "\n"
           << "config_hash " << format_hash(config_hash) << "\n"
           << "detector_recall " << recall << "\n"
           << "energy_consumption " << energy << "\n"
           << "tracking_error " << tracking_error << "\n"
           << "baseline_tracking_cost " << baseline_tracking_cost << "\n"
           << "baseline_flag_rate " << baseline_flag_rate << "\n";
        if (baseline_tracking_cost > 0.0)
            os << "tracking_error_ratio " << tracking_error / baseline_tracking_cost << "\n";
        return os.str();
    }
};

} // namespace avlab
