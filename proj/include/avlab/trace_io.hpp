#pragma once

// CSV serialization of episode traces. Column order is fixed; floats are
// written with 17 significant digits so a round trip is exact.

#include <array>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "avlab/errors.hpp"
#include "avlab/trace.hpp"

namespace avlab {

inline constexpr std::array<std::string_view, 27> kTraceColumns{
    "k",       "x",       "y",        "theta", "x_ref", "y_ref",         "theta_ref", "bx",    "by",
    "btheta",  "v_cmd",   "phi_cmd",  "v_d",   "phi_d", "attack_active", "range",     "bearing", "r1",
    "r2",      "r3",      "chi2",     "threshold", "detected", "j_t",    "j_e",       "j_s",   "reward"};

namespace detail {

inline void put_double(std::ostream& os, double v) {
    char buf[40];
    const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
    os.write(buf, n);
}

inline double parse_double(std::string_view s, long line, std::string_view column) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw ParseError("row " + std::to_string(line) + ": column '" + std::string(column) +
                             "' is not a number: '" + std::string(s) + "'",
                         line);
    return v;
}

inline long parse_long(std::string_view s, long line, std::string_view column) {
    long v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw ParseError("row " + std::to_string(line) + ": column '" + std::string(column) +
                             "' is not an integer: '" + std::string(s) + "'",
                         line);
    return v;
}

inline bool parse_flag(std::string_view s, long line, std::string_view column) {
    if (s == "0") return false;
    if (s == "1") return true;
    throw ParseError("row " + std::to_string(line) + ": column '" + std::string(column) + "' must be 0 or 1", line);
}

} // namespace detail

inline void write_trace_csv(std::ostream& os, const EpisodeTrace& trace) {
    for (std::size_t i = 0; i < kTraceColumns.size(); ++i) os << (i ? "," : "") << kTraceColumns[i];
    os << '\n';
    for (const auto& s : trace.steps) {
        os << s.k;
        const double values[] = {s.truth.x,          s.truth.y,        s.truth.theta,      s.reference.x,
                                 s.reference.y,      s.reference.theta, s.belief.x,        s.belief.y,
                                 s.belief.theta,     s.command.v,      s.command.phi,      s.attack.v_d,
                                 s.attack.phi_d};
        for (double v : values) {
            os << ',';
            detail::put_double(os, v);
        }
        os << ',' << (s.attack_active ? 1 : 0);
        const double tail[] = {s.measurement.range, s.measurement.bearing, s.residue(0), s.residue(1),
                               s.residue(2),        s.chi2,                s.threshold};
        for (double v : tail) {
            os << ',';
            detail::put_double(os, v);
        }
        os << ',' << (s.detected ? 1 : 0);
        for (double v : {s.components.j_t, s.components.j_e, s.components.j_s, s.reward}) {
            os << ',';
            detail::put_double(os, v);
        }
        os << '\n';
    }
}

// Rows are numbered from 1 for the header line.
inline EpisodeTrace read_trace_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw ParseError("row 1: missing header", 1);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    {
        std::string expected;
        for (std::size_t i = 0; i < kTraceColumns.size(); ++i) expected += (i ? "," : "") + std::string(kTraceColumns[i]);
        if (line != expected) throw ParseError("row 1: header does not match the trace schema", 1);
    }
    EpisodeTrace trace;
    long row = 1;
    std::vector<std::string_view> f;
    while (std::getline(is, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        f.clear();
        std::string_view rest(line);
        for (;;) {
            const auto comma = rest.find(',');
            f.push_back(rest.substr(0, comma));
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
        if (f.size() != kTraceColumns.size())
            throw ParseError("row " + std::to_string(row) + ": expected " + std::to_string(kTraceColumns.size()) +
                                 " fields, found " + std::to_string(f.size()),
                             row);
        const auto d = [&](std::size_t i) { return detail::parse_double(f[i], row, kTraceColumns[i]); };
        StepRecord s;
        s.k = detail::parse_long(f[0], row, kTraceColumns[0]);
        s.truth = {d(1), d(2), d(3)};
        s.reference = {d(4), d(5), d(6)};
        s.belief = {d(7), d(8), d(9)};
        s.command = {d(10), d(11)};
        s.attack = {d(12), d(13)};
        s.attack_active = detail::parse_flag(f[14], row, kTraceColumns[14]);
        s.measurement = {d(15), d(16)};
        s.residue = {d(17), d(18), d(19)};
        s.chi2 = d(20);
        s.threshold = d(21);
        s.detected = detail::parse_flag(f[22], row, kTraceColumns[22]);
        s.components = {d(23), d(24), d(25)};
        s.reward = d(26);
        trace.steps.push_back(s);
    }
    return trace;
}

inline void write_trace_csv(const std::string& path, const EpisodeTrace& trace) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw IoError("cannot open trace for writing: " + path);
    write_trace_csv(os, trace);
    if (!os) throw IoError("failed writing trace: " + path);
}

inline EpisodeTrace read_trace_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open trace: " + path);
    return read_trace_csv(is);
}

} // namespace avlab
