#pragma once

// Central finite-difference oracle for parameter gradients.

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

namespace avlab::gradcheck {

// Relative error with a small absolute floor so near-zero entries compare
// on an absolute scale.
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
    return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

// Perturbs params in place (restored afterwards) and returns the largest
// relative error between `analytic` and the central difference of `loss`.
template <class Loss>
double max_gradient_error(Eigen::VectorXd& params, const Eigen::VectorXd& analytic, Loss loss, double h = 1e-5) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < params.size(); ++i) {
        const double keep = params(i);
        params(i) = keep + h;
        const double up = loss();
        params(i) = keep - h;
        const double down = loss();
        params(i) = keep;
        worst = std::max(worst, relative_error(analytic(i), (up - down) / (2.0 * h)));
    }
    return worst;
}

} // namespace avlab::gradcheck
