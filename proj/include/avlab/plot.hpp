#pragma once

// Standalone SVG rendering of an episode trace: detector score against its
// threshold with attack windows shaded, and the true / reference / estimated
// trajectories.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "avlab/errors.hpp"
#include "avlab/trace.hpp"

namespace avlab {

struct StepRange {
    long first = 0; // inclusive
    long last = 0;  // exclusive
};

// Maximal runs of consecutive attacked steps.
inline std::vector<StepRange> attack_windows(const EpisodeTrace& trace) {
    std::vector<StepRange> out;
    for (const auto& s : trace.steps) {
        if (!s.attack_active) continue;
        if (!out.empty() && out.back().last == s.k) {
            out.back().last = s.k + 1;
        } else {
            out.push_back({s.k, s.k + 1});
        }
    }
    return out;
}

namespace detail {

inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

struct Axis {
    double lo = 0.0, hi = 1.0;  // data range
    double p0 = 0.0, p1 = 1.0;  // pixel range
    double operator()(double v) const { return hi > lo ? p0 + (v - lo) / (hi - lo) * (p1 - p0) : 0.5 * (p0 + p1); }
};

template <class Fx, class Fy>
std::string polyline(const EpisodeTrace& t, const Axis& ax, const Axis& ay, Fx fx, Fy fy, const char* cls,
                     const char* color) {
    std::string pts;
    for (const auto& s : t.steps) {
        pts += num(ax(fx(s))) + "," + num(ay(fy(s))) + " ";
    }
    return "<polyline class=\"" + std::string(cls) + "\" fill=\"none\" stroke=\"" + color +
           "\" stroke-width=\"1.2\" points=\"" + pts + "\"/>\n";
}

} // namespace detail

inline std::string render_svg(const EpisodeTrace& t) {
    constexpr double W = 900, H = 380, pad = 45;
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << 2 * H << "\" viewBox=\"0 0 "
       << W << " " << 2 * H << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    // Panel A: chi-square score vs threshold.
    long k_lo = t.steps.empty() ? 0 : t.steps.front().k;
    long k_hi = t.steps.empty() ? 1 : t.steps.back().k + 1;
    double y_hi = 1.0;
    for (const auto& s : t.steps) y_hi = std::max({y_hi, s.chi2, s.threshold});
    const detail::Axis ax{static_cast<double>(k_lo), static_cast<double>(k_hi), pad, W - pad};
    const detail::Axis ay{0.0, y_hi * 1.05, H - pad, pad};
    os << "<g id=\"detector\">\n<text x=\"" << pad << "\" y=\"" << pad - 15
       << "\" font-family=\"sans-serif\" font-size=\"14\">chi-square score vs threshold (shaded: attack windows)</text>\n";
    for (const StepRange& r : attack_windows(t)) {
        const double x0 = ax(static_cast<double>(r.first));
        const double x1 = ax(static_cast<double>(r.last));
        os << "<rect class=\"attack-window\" data-k0=\"" << r.first << "\" data-k1=\"" << r.last << "\" x=\""
           << detail::num(x0) << "\" y=\"" << pad << "\" width=\"" << detail::num(x1 - x0) << "\" height=\""
           << H - 2 * pad << "\" fill=\"#f4b6b6\" fill-opacity=\"0.5\"/>\n";
    }
    os << "<rect x=\"" << pad << "\" y=\"" << pad << "\" width=\"" << W - 2 * pad << "\" height=\"" << H - 2 * pad
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    const auto k_of = [](const StepRecord& s) { return static_cast<double>(s.k) + 0.5; };
    os << detail::polyline(t, ax, ay, k_of, [](const StepRecord& s) { return s.chi2; }, "chi2", "#1f77b4");
    os << detail::polyline(t, ax, ay, k_of, [](const StepRecord& s) { return s.threshold; }, "threshold", "#d62728");
    for (const auto& s : t.steps)
        if (s.detected)
            os << "<circle class=\"detection\" cx=\"" << detail::num(ax(k_of(s))) << "\" cy=\"" << detail::num(ay(s.chi2))
               << "\" r=\"2\" fill=\"#d62728\"/>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"" << H - 10 << "\" font-family=\"sans-serif\" font-size=\"12\">step k</text>\n";
    os << "</g>\n";

    // Panel B: trajectories with equal axis scaling.
    double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo, y_lo = x_lo, y_hi2 = -x_lo;
    for (const auto& s : t.steps) {
        for (const VehicleState* p : {&s.truth, &s.reference, &s.belief}) {
            x_lo = std::min(x_lo, p->x);
            x_hi = std::max(x_hi, p->x);
            y_lo = std::min(y_lo, p->y);
            y_hi2 = std::max(y_hi2, p->y);
        }
    }
    if (t.steps.empty()) x_lo = y_lo = -1, x_hi = y_hi2 = 1;
    const double span = std::max({x_hi - x_lo, y_hi2 - y_lo, 1e-6}) * 1.1;
    const double cx = 0.5 * (x_lo + x_hi), cy = 0.5 * (y_lo + y_hi2);
    const double side = H - 2 * pad;
    const double left = (W - side) / 2;
    const detail::Axis bx{cx - span / 2, cx + span / 2, left, left + side};
    const detail::Axis by{cy - span / 2, cy + span / 2, 2 * H - pad, H + pad};
    os << "<g id=\"trajectory\">\n<text x=\"" << pad << "\" y=\"" << H + pad - 15
       << "\" font-family=\"sans-serif\" font-size=\"14\">trajectory: reference (gray), true (red), EKF estimate (blue)</text>\n";
    os << "<rect x=\"" << left << "\" y=\"" << H + pad << "\" width=\"" << side << "\" height=\"" << side
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    os << detail::polyline(t, bx, by, [](const StepRecord& s) { return s.reference.x; },
                           [](const StepRecord& s) { return s.reference.y; }, "reference", "#7f7f7f");
    os << detail::polyline(t, bx, by, [](const StepRecord& s) { return s.truth.x; },
                           [](const StepRecord& s) { return s.truth.y; }, "truth", "#d62728");
    os << detail::polyline(t, bx, by, [](const StepRecord& s) { return s.belief.x; },
                           [](const StepRecord& s) { return s.belief.y; }, "belief", "#1f77b4");
    os << "</g>\n</svg>\n";
    return os.str();
}

inline void write_plot_svg(const std::string& path, const EpisodeTrace& trace) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw IoError("cannot open plot for writing: " + path);
    os << render_svg(trace);
    if (!os) throw IoError("failed writing plot: " + path);
}

} // namespace avlab
