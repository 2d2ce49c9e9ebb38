#pragma once

#include <Eigen/Core>
#include <functional>

namespace testutil {

/// Central finite-difference gradient of a scalar cost over a flat vector.
inline Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& cost,
                                   const Eigen::VectorXd& x, double h = 1e-5) {
    Eigen::VectorXd g(x.size());
    Eigen::VectorXd p = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double orig = p[i];
        p[i] = orig + h;
        const double fp = cost(p);
        p[i] = orig - h;
        const double fm = cost(p);
        p[i] = orig;
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

/// Normwise relative error between analytic and finite-difference gradients.
inline double gradient_rel_error(const Eigen::VectorXd& analytic, const Eigen::VectorXd& fd) {
    const double denom = std::max(analytic.norm() + fd.norm(), 1e-12);
    return (analytic - fd).norm() / denom;
}

} // namespace testutil
