#pragma once

// Small tanh multilayer perceptron with batched forward and exact
// reverse-mode gradients. Samples are stored column-wise.

#include <cmath>
#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "avlab/errors.hpp"

namespace avlab::rl {

class Mlp {
public:
    struct Tape {
        // activations[0] is the input; activations[l] the output of layer l.
        std::vector<Eigen::MatrixXd> activations;
    };

    Mlp() = default;

    explicit Mlp(std::vector<int> dims) : dims_(std::move(dims)) {
        if (dims_.size() < 2) throw ConfigError("Mlp needs at least an input and an output dimension");
        std::size_t n = 0;
        for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
            if (dims_[l] < 1 || dims_[l + 1] < 1) throw ConfigError("Mlp layer dimensions must be positive");
            offsets_.push_back(n);
            n += static_cast<std::size_t>(dims_[l + 1]) * (dims_[l] + 1);
        }
        params_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    }

    const std::vector<int>& dims() const { return dims_; }
    int input_dim() const { return dims_.front(); }
    int output_dim() const { return dims_.back(); }
    int layer_count() const { return static_cast<int>(dims_.size()) - 1; }
    Eigen::Index parameter_count() const { return params_.size(); }

    Eigen::VectorXd& parameters() { return params_; }
    const Eigen::VectorXd& parameters() const { return params_; }

    Eigen::Map<const Eigen::MatrixXd> weight(int l) const {
        return {params_.data() + offsets_[l], dims_[l + 1], dims_[l]};
    }
    Eigen::Map<Eigen::MatrixXd> weight(int l) { return {params_.data() + offsets_[l], dims_[l + 1], dims_[l]}; }
    Eigen::Map<const Eigen::VectorXd> bias(int l) const {
        return {params_.data() + offsets_[l] + static_cast<std::size_t>(dims_[l + 1]) * dims_[l], dims_[l + 1]};
    }
    Eigen::Map<Eigen::VectorXd> bias(int l) {
        return {params_.data() + offsets_[l] + static_cast<std::size_t>(dims_[l + 1]) * dims_[l], dims_[l + 1]};
    }

    // Glorot-uniform weights, zero biases; the output layer is scaled down.
    void initialize(std::mt19937_64& rng, double output_scale = 1.0) {
        params_.setZero();
        for (int l = 0; l < layer_count(); ++l) {
            const double limit = std::sqrt(6.0 / (dims_[l] + dims_[l + 1])) * (l + 1 == layer_count() ? output_scale : 1.0);
            std::uniform_real_distribution<double> u(-limit, limit);
            auto w = weight(l);
            for (Eigen::Index j = 0; j < w.cols(); ++j)
                for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = u(rng);
        }
    }

    Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const {
        check_input(x);
        Eigen::MatrixXd a = x;
        for (int l = 0; l < layer_count(); ++l) {
            Eigen::MatrixXd z = (weight(l) * a).colwise() + bias(l);
            a = l + 1 < layer_count() ? Eigen::MatrixXd(z.array().tanh()) : z;
        }
        return a;
    }

    Eigen::MatrixXd forward(const Eigen::MatrixXd& x, Tape& tape) const {
        check_input(x);
        tape.activations.assign(1, x);
        for (int l = 0; l < layer_count(); ++l) {
            Eigen::MatrixXd z = (weight(l) * tape.activations.back()).colwise() + bias(l);
            if (l + 1 < layer_count()) z = z.array().tanh().matrix();
            tape.activations.push_back(std::move(z));
        }
        return tape.activations.back();
    }

    // Adds d(sum upstream . output)/d(params) into grad and returns the
    // gradient with respect to the input batch.
    Eigen::MatrixXd backward(const Tape& tape, const Eigen::MatrixXd& upstream, Eigen::VectorXd& grad) const {
        if (grad.size() != params_.size()) grad = Eigen::VectorXd::Zero(params_.size());
        if (upstream.rows() != output_dim() || upstream.cols() != tape.activations.front().cols())
            throw UsageError("Mlp::backward: upstream gradient shape mismatch");
        Eigen::MatrixXd delta = upstream;
        for (int l = layer_count() - 1; l >= 0; --l) {
            const Eigen::MatrixXd& in = tape.activations[static_cast<std::size_t>(l)];
            const std::size_t off = offsets_[l];
            Eigen::Map<Eigen::MatrixXd> gw(grad.data() + off, dims_[l + 1], dims_[l]);
            Eigen::Map<Eigen::VectorXd> gb(grad.data() + off + static_cast<std::size_t>(dims_[l + 1]) * dims_[l], dims_[l + 1]);
            gw.noalias() += delta * in.transpose();
            gb += delta.rowwise().sum();
            Eigen::MatrixXd prev = weight(l).transpose() * delta;
            if (l > 0) prev.array() *= 1.0 - in.array().square();
            delta = std::move(prev);
        }
        return delta;
    }

    bool finite() const { return params_.allFinite(); }

private:
    void check_input(const Eigen::MatrixXd& x) const {
        if (dims_.empty()) throw UsageError("Mlp used before construction");
        if (x.rows() != input_dim())
            throw UsageError("Mlp input dimension mismatch: expected " + std::to_string(input_dim()) + ", got " +
                             std::to_string(x.rows()));
    }

    std::vector<int> dims_;
    std::vector<std::size_t> offsets_;
    Eigen::VectorXd params_;
};

inline Eigen::VectorXd mlp_forward(const Mlp& net, const Eigen::VectorXd& input) {
    return net.forward(Eigen::MatrixXd(input));
}

inline Eigen::VectorXd mlp_gradient(const Mlp& net, const Eigen::VectorXd& input, const Eigen::VectorXd& upstream) {
    Mlp::Tape tape;
    net.forward(Eigen::MatrixXd(input), tape);
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(net.parameter_count());
    net.backward(tape, Eigen::MatrixXd(upstream), grad);
    return grad;
}

} // namespace avlab::rl
