#pragma once

// Chi-square detector over the whitened EKF residue.

#include <cmath>
#include <cstddef>
#include <deque>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "avlab/errors.hpp"
#include "avlab/estimation.hpp"

namespace avlab {

namespace detail {

// Regularized lower incomplete gamma P(a, x): power series below a + 1,
// modified Lentz continued fraction for Q(a, x) above.
inline double lower_gamma_series(double a, double x) {
    double term = 1.0 / a;
    double sum = term;
    for (int n = 1; n < 1000; ++n) {
        term *= x / (a + n);
        sum += term;
        if (std::abs(term) < std::abs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

inline double upper_gamma_fraction(double a, double x) {
    constexpr double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 1000; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < 1e-16) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

} // namespace detail

inline double regularized_lower_gamma(double a, double x) {
    if (!(a > 0.0)) throw ConfigError("regularized_lower_gamma: a must be positive");
    if (x <= 0.0) return 0.0;
    if (std::isinf(x)) return 1.0;
    if (x < a + 1.0) return detail::lower_gamma_series(a, x);
    return 1.0 - detail::upper_gamma_fraction(a, x);
}

inline double chi2_cdf(double x, int dof) {
    if (dof < 1) throw ConfigError("chi2_cdf: dof must be >= 1");
    return regularized_lower_gamma(0.5 * dof, 0.5 * x);
}

// Inverse chi-square CDF by bisection; absolute error well below 1e-6.
inline double chi2_quantile(double p, int dof) {
    if (!(p > 0.0 && p < 1.0)) throw ConfigError("chi2_quantile: probability must lie in (0, 1)");
    if (dof < 1) throw ConfigError("chi2_quantile: dof must be >= 1");
    double lo = 0.0;
    double hi = std::max(1.0, static_cast<double>(dof));
    while (chi2_cdf(hi, dof) < p) hi *= 2.0;
    for (int i = 0; i < 200 && hi - lo > 1e-12 * std::max(1.0, hi); ++i) {
        const double mid = 0.5 * (lo + hi);
        (chi2_cdf(mid, dof) < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

inline constexpr double kResidueRegularization = 1e-9;

// r^T (S_r + eps I)^{-1} r.
inline double chi2_score(const Eigen::Vector3d& r, const Eigen::Matrix3d& residue_cov) {
    if (!r.allFinite() || !residue_cov.allFinite()) throw FaultError("chi2_score: non-finite input");
    const Eigen::Matrix3d s = residue_cov + kResidueRegularization * Eigen::Matrix3d::Identity();
    const double score = r.dot(s.ldlt().solve(r));
    if (!std::isfinite(score)) throw FaultError("chi2_score: non-finite score");
    return std::max(0.0, score);
}

struct DetectorConfig {
    double false_alarm_rate = 0.05;
    int window = 1;
    // Rank of the residue covariance K S K^T, i.e. the measurement dimension.
    int dof = 2;

    void validate() const {
        if (!(false_alarm_rate > 0.0 && false_alarm_rate < 1.0))
            throw ConfigError("detector.false_alarm_rate must lie in (0, 1)");
        if (window < 1) throw ConfigError("detector.window must be a positive integer");
        if (dof < 1) throw ConfigError("detector.dof must be a positive integer");
    }

    // Threshold on the mean of n scores: the sum of n independent chi2(dof)
    // variables is chi2(n * dof).
    double threshold(int n = 1) const {
        return chi2_quantile(1.0 - false_alarm_rate, n * dof) / n;
    }
};

struct DetectorVerdict {
    double score = 0.0;
    double threshold = 0.0;
    bool flagged = false; // D_k
};

inline DetectorVerdict verdict(std::span<const double> scores, const DetectorConfig& config) {
    if (scores.empty()) throw UsageError("verdict: no scores available");
    const std::size_t n = std::min<std::size_t>(scores.size(), static_cast<std::size_t>(config.window));
    const auto recent = scores.last(n);
    const double mean = std::accumulate(recent.begin(), recent.end(), 0.0) / static_cast<double>(n);
    const double thr = config.threshold(static_cast<int>(n));
    return {mean, thr, mean > thr};
}

// Stateful wrapper owning the score window; one per environment.
class ChiSquareDetector {
public:
    explicit ChiSquareDetector(DetectorConfig config = {}) : config_(config) {
        config_.validate();
        thresholds_.reserve(static_cast<std::size_t>(config_.window));
        for (int n = 1; n <= config_.window; ++n) thresholds_.push_back(config_.threshold(n));
    }

    const DetectorConfig& config() const { return config_; }

    void reset() { scores_.clear(); }

    DetectorVerdict push(double score) {
        scores_.push_back(score);
        if (scores_.size() > static_cast<std::size_t>(config_.window)) scores_.pop_front();
        const double mean = std::accumulate(scores_.begin(), scores_.end(), 0.0) / static_cast<double>(scores_.size());
        const double thr = thresholds_[scores_.size() - 1];
        return {mean, thr, mean > thr};
    }

private:
    DetectorConfig config_;
    std::vector<double> thresholds_;
    std::deque<double> scores_;
};

} // namespace avlab
