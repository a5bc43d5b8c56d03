#pragma once

// Tanh-squashed diagonal Gaussian policy. The trunk emits the pre-squash mean
// and log-std for every action component; actions are tanh(u) scaled to the
// action box.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "avlab/errors.hpp"
#include "avlab/rl/mlp.hpp"

namespace avlab::rl {

inline constexpr double kLogStdMin = -5.0;
inline constexpr double kLogStdMax = 2.0;
inline constexpr double kHalfLog2Pi = 0.91893853320467274178;

// log(1 - tanh(u)^2), stable for large |u|.
inline double log_one_minus_tanh2(double u) {
    const double a = std::abs(u);
    return 2.0 * (std::numbers::ln2 - a - std::log1p(std::exp(-2.0 * a)));
}

class GaussianPolicy {
public:
    struct Heads {
        Eigen::MatrixXd mean;
        Eigen::MatrixXd log_std;
        Eigen::MatrixXd log_std_pass; // 1 where the clamp is inactive, else 0
    };

    struct Sample {
        Eigen::VectorXd pre_squash;
        Eigen::VectorXd action;
        double log_prob = 0.0; // Gaussian density of pre_squash
    };

    GaussianPolicy() = default;

    GaussianPolicy(int obs_dim, const std::vector<int>& hidden, Eigen::VectorXd action_scale)
        : action_scale_(std::move(action_scale)) {
        std::vector<int> dims{obs_dim};
        dims.insert(dims.end(), hidden.begin(), hidden.end());
        dims.push_back(2 * static_cast<int>(action_scale_.size()));
        net_ = Mlp(dims);
        check();
    }

    GaussianPolicy(Mlp net, Eigen::VectorXd action_scale) : net_(std::move(net)), action_scale_(std::move(action_scale)) {
        check();
    }

    void initialize(std::mt19937_64& rng, double initial_log_std = 0.0) {
        net_.initialize(rng, 0.01);
        net_.bias(net_.layer_count() - 1).tail(action_dim()).setConstant(initial_log_std);
    }

    Mlp& net() { return net_; }
    const Mlp& net() const { return net_; }
    int action_dim() const { return static_cast<int>(action_scale_.size()); }
    int observation_dim() const { return net_.input_dim(); }
    const Eigen::VectorXd& action_scale() const { return action_scale_; }

    Heads heads(const Eigen::MatrixXd& obs, Mlp::Tape* tape = nullptr) const {
        const Eigen::MatrixXd out = tape ? net_.forward(obs, *tape) : net_.forward(obs);
        const int a = action_dim();
        Heads h;
        h.mean = out.topRows(a);
        const Eigen::MatrixXd raw = out.bottomRows(a);
        h.log_std = raw.cwiseMax(kLogStdMin).cwiseMin(kLogStdMax);
        h.log_std_pass = ((raw.array() > kLogStdMin) && (raw.array() < kLogStdMax)).cast<double>().matrix();
        return h;
    }

    // Back-propagates gradients with respect to mean and (clamped) log-std.
    void backward(const Mlp::Tape& tape, const Heads& h, const Eigen::MatrixXd& d_mean,
                  const Eigen::MatrixXd& d_log_std, Eigen::VectorXd& grad) const {
        Eigen::MatrixXd upstream(2 * action_dim(), d_mean.cols());
        upstream.topRows(action_dim()) = d_mean;
        upstream.bottomRows(action_dim()) = d_log_std.cwiseProduct(h.log_std_pass);
        net_.backward(tape, upstream, grad);
    }

    // tanh(u) kept strictly inside (-1, 1).
    static Eigen::VectorXd normalized_action(const Eigen::VectorXd& u) {
        constexpr double edge = 1.0 - 1e-12;
        return u.array().tanh().cwiseMax(-edge).cwiseMin(edge).matrix();
    }

    Eigen::VectorXd squash(const Eigen::VectorXd& u) const {
        return normalized_action(u).cwiseProduct(action_scale_);
    }

    static double gaussian_log_prob(const Eigen::VectorXd& u, const Eigen::VectorXd& mean,
                                    const Eigen::VectorXd& log_std) {
        const Eigen::ArrayXd z = (u - mean).array() * (-log_std.array()).exp();
        return (-0.5 * z.square() - log_std.array() - kHalfLog2Pi).sum();
    }

    static double tanh_log_jacobian(const Eigen::VectorXd& u) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < u.size(); ++i) s += log_one_minus_tanh2(u(i));
        return s;
    }

    // Density of the squashed action in normalized [-1, 1] coordinates.
    static double squashed_log_prob(const Eigen::VectorXd& u, const Eigen::VectorXd& mean,
                                    const Eigen::VectorXd& log_std) {
        return gaussian_log_prob(u, mean, log_std) - tanh_log_jacobian(u);
    }

    // Density of an action expressed in action-box units.
    double log_prob_action(const Eigen::VectorXd& obs, const Eigen::VectorXd& action) const {
        const Heads h = heads(obs);
        const Eigen::ArrayXd t = action.array() / action_scale_.array();
        if ((t.abs() >= 1.0).any()) return -std::numeric_limits<double>::infinity();
        const Eigen::VectorXd u = t.atanh().matrix();
        return squashed_log_prob(u, h.mean.col(0), h.log_std.col(0)) - action_scale_.array().log().sum();
    }

    Sample sample(const Eigen::VectorXd& obs, std::mt19937_64& rng) const {
        const Heads h = heads(obs);
        std::normal_distribution<double> normal(0.0, 1.0);
        Sample s;
        s.pre_squash.resize(action_dim());
        for (int i = 0; i < action_dim(); ++i) s.pre_squash(i) = h.mean(i, 0) + std::exp(h.log_std(i, 0)) * normal(rng);
        s.action = squash(s.pre_squash);
        s.log_prob = gaussian_log_prob(s.pre_squash, h.mean.col(0), h.log_std.col(0));
        return s;
    }

    Eigen::VectorXd mean_action(const Eigen::VectorXd& obs) const { return squash(heads(obs).mean.col(0)); }

private:
    void check() const {
        if (action_scale_.size() < 1 || (action_scale_.array() <= 0.0).any())
            throw ConfigError("GaussianPolicy: action scale must be positive");
        if (net_.output_dim() != 2 * action_dim())
            throw ConfigError("GaussianPolicy: trunk must emit mean and log-std per action component");
    }

    Mlp net_;
    Eigen::VectorXd action_scale_;
};

} // namespace avlab::rl
