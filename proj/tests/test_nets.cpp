#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "avlab/rl/mlp.hpp"
#include "avlab/rl/optim.hpp"
#include "avlab/rl/policy.hpp"
#include "gradcheck.hpp"

using namespace avlab;
using namespace avlab::rl;

namespace {

Mlp random_net(std::vector<int> dims, std::uint64_t seed) {
    Mlp net(std::move(dims));
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 0.5);
    for (Eigen::Index i = 0; i < net.parameter_count(); ++i) net.parameters()(i) = n(rng);
    return net;
}

} // namespace

TEST(Mlp, ZeroParametersGiveZeroOutput) {
    Mlp net({3, 8, 2});
    EXPECT_TRUE(mlp_forward(net, Eigen::Vector3d(1, -2, 3)).isZero(0.0));
}

TEST(Mlp, IdentityLinearLayer) {
    Mlp net({3, 3});
    net.weight(0) = Eigen::Matrix3d::Identity();
    const Eigen::Vector3d x(0.5, -1.5, 2.0);
    EXPECT_EQ(mlp_forward(net, x), Eigen::VectorXd(x));
}

TEST(Mlp, LayoutIsWeightsThenBias) {
    Mlp net({2, 3});
    EXPECT_EQ(net.parameter_count(), 9);
    net.parameters() << 1, 2, 3, 4, 5, 6, 10, 20, 30;
    // Column-major 3x2 weight: [[1,4],[2,5],[3,6]].
    EXPECT_EQ(mlp_forward(net, Eigen::Vector2d(1, 0)), Eigen::Vector3d(11, 22, 33));
}

TEST(Mlp, BoundedInputsGiveFiniteOutputs) {
    Mlp net({3, 8, 2});
    std::mt19937_64 rng(1);
    net.initialize(rng);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int i = 0; i < 1000; ++i) {
        Eigen::Vector3d x(u(rng), u(rng), u(rng));
        x *= 10.0 / std::max(1e-12, x.norm()) * std::abs(u(rng));
        EXPECT_TRUE(mlp_forward(net, x).allFinite());
    }
}

TEST(Mlp, GradientMatchesFiniteDifferences) {
    Mlp net = random_net({3, 8, 2}, 7);
    const Eigen::Vector3d x(0.3, -0.7, 1.1);
    const Eigen::Vector2d up(0.6, -1.3);
    const Eigen::VectorXd g = mlp_gradient(net, x, up);
    const double err = gradcheck::max_gradient_error(net.parameters(), g, [&] { return up.dot(mlp_forward(net, x)); });
    EXPECT_LT(err, 1e-4);
}

TEST(Mlp, BatchedGradientAndInputGradient) {
    Mlp net = random_net({4, 6, 5, 3}, 8);
    std::mt19937_64 rng(3);
    Eigen::MatrixXd x = Eigen::MatrixXd::Random(4, 7);
    const Eigen::MatrixXd up = Eigen::MatrixXd::Random(3, 7);
    Mlp::Tape tape;
    net.forward(x, tape);
    Eigen::VectorXd g;
    const Eigen::MatrixXd dx = net.backward(tape, up, g);
    const auto loss = [&] { return (up.array() * net.forward(x).array()).sum(); };
    EXPECT_LT(gradcheck::max_gradient_error(net.parameters(), g, loss), 1e-4);

    Eigen::VectorXd xv = Eigen::Map<Eigen::VectorXd>(x.data(), x.size());
    const Eigen::VectorXd dxv = Eigen::Map<const Eigen::VectorXd>(dx.data(), dx.size());
    const auto loss_x = [&] {
        const Eigen::MatrixXd xm = Eigen::Map<const Eigen::MatrixXd>(xv.data(), 4, 7);
        return (up.array() * net.forward(xm).array()).sum();
    };
    EXPECT_LT(gradcheck::max_gradient_error(xv, dxv, loss_x), 1e-4);
}

TEST(Mlp, ZeroUpstreamAndLinearity) {
    Mlp net = random_net({3, 8, 2}, 9);
    const Eigen::Vector3d x(1, 2, 3);
    EXPECT_TRUE(mlp_gradient(net, x, Eigen::Vector2d::Zero()).isZero(0.0));
    const Eigen::Vector2d up(0.4, 0.9);
    const Eigen::VectorXd g1 = mlp_gradient(net, x, up);
    const Eigen::VectorXd g3 = mlp_gradient(net, x, 3.0 * up);
    EXPECT_LT((g3 - 3.0 * g1).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Mlp, RejectsBadShapes) {
    EXPECT_THROW(Mlp({3}), ConfigError);
    EXPECT_THROW(Mlp({3, 0, 2}), ConfigError);
    Mlp net({3, 2});
    EXPECT_THROW(mlp_forward(net, Eigen::Vector2d(1, 1)), UsageError);
}

TEST(Optim, ClipGradNorm) {
    Eigen::VectorXd g(2);
    g << 3, 4;
    EXPECT_EQ(clip_grad_norm(g, 0.5), 5.0);
    EXPECT_NEAR(g.norm(), 0.5, 1e-15);
    g << 0.1, 0.1;
    clip_grad_norm(g, 0.5);
    EXPECT_EQ(g, Eigen::Vector2d(0.1, 0.1));
}

TEST(Optim, AdamFirstStepAndConvergence) {
    Adam opt(2, 0.1);
    Eigen::VectorXd p(2), g(2);
    p << 1.0, -1.0;
    g << 10.0, -0.001;
    opt.step(p, g);
    // The bias-corrected first step moves each coordinate by ~lr * sign(grad).
    EXPECT_NEAR(p(0), 0.9, 1e-6);
    EXPECT_NEAR(p(1), -0.9, 1e-4);

    Adam o2(1, 0.05);
    Eigen::VectorXd x(1);
    x << 5.0;
    for (int i = 0; i < 2000; ++i) {
        Eigen::VectorXd gx(1);
        gx << 2.0 * (x(0) - 1.5);
        o2.step(x, gx);
    }
    EXPECT_NEAR(x(0), 1.5, 1e-3);
}

TEST(Policy, SamplesStayInsideActionBox) {
    GaussianPolicy pol(3, {8}, Eigen::Vector2d(1.0, 0.3));
    std::mt19937_64 rng(5);
    pol.initialize(rng, kLogStdMax);
    pol.net().bias(1).head(2) << 30.0, -30.0; // push the mean deep into saturation
    for (int i = 0; i < 10000; ++i) {
        const auto s = pol.sample(Eigen::Vector3d(0.1, 0.2, 0.3), rng);
        EXPECT_LT(std::abs(s.action(0)), 1.0);
        EXPECT_LT(std::abs(s.action(1)), 0.3);
        EXPECT_TRUE(std::isfinite(s.log_prob));
    }
}

TEST(Policy, LogStdIsClampedWithZeroGradientOutside) {
    GaussianPolicy pol(1, {2}, Eigen::VectorXd::Ones(1));
    pol.net().bias(1)(1) = 7.0;
    const auto h = pol.heads(Eigen::VectorXd::Zero(1));
    EXPECT_EQ(h.log_std(0, 0), kLogStdMax);
    EXPECT_EQ(h.log_std_pass(0, 0), 0.0);
}

TEST(Policy, GaussianLogProbClosedForm) {
    Eigen::VectorXd u(2), m(2), ls(2);
    u << 0.3, -1.0;
    m << 0.1, 0.5;
    ls << -0.2, 0.4;
    double expected = 0.0;
    for (int i = 0; i < 2; ++i) {
        const double s = std::exp(ls(i));
        expected += -0.5 * std::pow((u(i) - m(i)) / s, 2) - std::log(s) - 0.5 * std::log(2 * std::numbers::pi);
    }
    EXPECT_NEAR(GaussianPolicy::gaussian_log_prob(u, m, ls), expected, 1e-12);
    EXPECT_NEAR(log_one_minus_tanh2(0.7), std::log(1 - std::pow(std::tanh(0.7), 2)), 1e-12);
    EXPECT_NEAR(log_one_minus_tanh2(-40.0), std::log(4.0) - 80.0, 1e-9);
}

// Midpoint rule over the open interval; the integrand vanishes at both ends.
TEST(Policy, SquashedDensityIntegratesToOne) {
    for (double log_std : {-1.0, -0.5, 0.0}) {
        for (double mean : {0.0, 0.8}) {
            const int n = 400000;
            double mass = 0.0;
            Eigen::VectorXd m(1), ls(1), u(1);
            m << mean;
            ls << log_std;
            for (int i = 0; i < n; ++i) {
                const double t = -1.0 + (i + 0.5) * 2.0 / n;
                u << std::atanh(t);
                mass += std::exp(GaussianPolicy::squashed_log_prob(u, m, ls)) * 2.0 / n;
            }
            EXPECT_NEAR(mass, 1.0, 1e-2) << "mean " << mean << " log_std " << log_std;
        }
    }
}

TEST(Policy, ActionUnitDensityIntegratesToOne) {
    GaussianPolicy pol(1, {4}, Eigen::VectorXd::Constant(1, 0.3));
    std::mt19937_64 rng(2);
    pol.initialize(rng, -0.5);
    const Eigen::VectorXd obs = Eigen::VectorXd::Constant(1, 0.2);
    const int n = 200000;
    double mass = 0.0;
    for (int i = 0; i < n; ++i) {
        const double a = -0.3 + (i + 0.5) * 0.6 / n;
        mass += std::exp(pol.log_prob_action(obs, Eigen::VectorXd::Constant(1, a))) * 0.6 / n;
    }
    EXPECT_NEAR(mass, 1.0, 1e-2);
    EXPECT_EQ(pol.log_prob_action(obs, Eigen::VectorXd::Constant(1, 0.3)), -INFINITY);
}

TEST(Policy, MeanActionIsSquashedMean) {
    GaussianPolicy pol(3, {8}, Eigen::Vector2d(1.0, 0.3));
    std::mt19937_64 rng(4);
    pol.initialize(rng);
    const Eigen::Vector3d obs(0.5, 0.1, -0.2);
    const auto h = pol.heads(obs);
    const Eigen::VectorXd a = pol.mean_action(obs);
    EXPECT_NEAR(a(0), std::tanh(h.mean(0, 0)) * 1.0, 1e-15);
    EXPECT_NEAR(a(1), std::tanh(h.mean(1, 0)) * 0.3, 1e-15);
}

TEST(Policy, RejectsInconsistentShapes) {
    EXPECT_THROW(GaussianPolicy(Mlp({3, 8, 3}), Eigen::Vector2d(1, 1)), ConfigError);
    EXPECT_THROW(GaussianPolicy(3, {8}, Eigen::Vector2d(1, 0)), ConfigError);
}
