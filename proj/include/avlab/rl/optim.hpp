#pragma once

#include <cmath>

#include <Eigen/Dense>

namespace avlab::rl {

// Scales grad in place so its L2 norm is at most max_norm; returns the
// original norm.
inline double clip_grad_norm(Eigen::VectorXd& grad, double max_norm) {
    const double norm = grad.norm();
    if (max_norm > 0.0 && norm > max_norm) grad *= max_norm / norm;
    return norm;
}

class Adam {
public:
    Adam() = default;
    Adam(Eigen::Index size, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps),
          m_(Eigen::VectorXd::Zero(size)), v_(Eigen::VectorXd::Zero(size)) {}

    // Descent step: params -= lr * m_hat / (sqrt(v_hat) + eps).
    void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad) {
        ++t_;
        m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
        v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseAbs2();
        const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
        params.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps_);
    }

    double learning_rate() const { return lr_; }
    long steps() const { return t_; }

private:
    double lr_ = 3e-4;
    double beta1_ = 0.9;
    double beta2_ = 0.999;
    double eps_ = 1e-8;
    long t_ = 0;
    Eigen::VectorXd m_;
    Eigen::VectorXd v_;
};

} // namespace avlab::rl
