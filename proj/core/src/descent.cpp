#include "cardlv/descent.hpp"

#include <cmath>
#include <deque>

#include "cardlv/errors.hpp"

namespace cardlv {

namespace {

// Two-loop recursion over the stored curvature pairs; falls back to the
// steepest-descent direction while no valid pair exists.
Eigen::VectorXd lbfgs_direction(const Eigen::VectorXd& grad,
                                const std::deque<Eigen::VectorXd>& s_hist,
                                const std::deque<Eigen::VectorXd>& y_hist) {
    if (s_hist.empty()) return -grad;
    const std::size_t m = s_hist.size();
    std::vector<double> alpha(m), rho(m);
    Eigen::VectorXd q = grad;
    for (std::size_t i = m; i-- > 0;) {
        rho[i] = 1.0 / y_hist[i].dot(s_hist[i]);
        alpha[i] = rho[i] * s_hist[i].dot(q);
        q -= alpha[i] * y_hist[i];
    }
    const double gamma = s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    q *= gamma;
    for (std::size_t i = 0; i < m; ++i) {
        const double beta = rho[i] * y_hist[i].dot(q);
        q += (alpha[i] - beta) * s_hist[i];
    }
    return -q;
}

} // namespace

DescentResult minimize(Eigen::VectorXd& x, const CostFunction& f, const TrainControl& ctl,
                       const std::string& stage, TrainingCurve* curve) {
    Eigen::VectorXd grad(x.size());
    double cost = f.cost_grad(x, grad);
    if (!std::isfinite(cost))
        throw TrainingError(stage + ": non-finite cost at initial point");

    DescentResult res;
    res.initial_cost = cost;
    if (curve) curve->push_back(cost);

    const bool use_lbfgs = ctl.method == OptMethod::lbfgs;
    std::deque<Eigen::VectorXd> s_hist, y_hist;
    Eigen::VectorXd trial(x.size());

    for (int iter = 1; iter <= ctl.max_iters; ++iter) {
        const double prev = cost;
        if (ctl.line_search || use_lbfgs) {
            const Eigen::VectorXd dir =
                use_lbfgs ? lbfgs_direction(grad, s_hist, y_hist) : Eigen::VectorXd(-grad);
            // L-BFGS directions carry their own scale; unit step first.
            double t = use_lbfgs ? 1.0 : ctl.step;
            bool accepted = false;
            for (int h = 0; h <= ctl.max_halvings; ++h) {
                trial = x + t * dir;
                const double c = f.cost(trial);
                if (std::isfinite(c) && c <= cost) {
                    if (use_lbfgs) {
                        Eigen::VectorXd step_vec = t * dir;
                        Eigen::VectorXd grad_prev = grad;
                        cost = f.cost_grad(trial, grad);
                        x.swap(trial);
                        Eigen::VectorXd y = grad - grad_prev;
                        if (y.dot(step_vec) > 1e-12) {
                            s_hist.push_back(std::move(step_vec));
                            y_hist.push_back(std::move(y));
                            if (static_cast<int>(s_hist.size()) > ctl.lbfgs_history) {
                                s_hist.pop_front();
                                y_hist.pop_front();
                            }
                        }
                    } else {
                        x.swap(trial);
                        cost = f.cost_grad(x, grad);
                    }
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if (!accepted) break;  // no descent step found: treat as stationary
        } else {
            x -= ctl.step * grad;
            cost = f.cost_grad(x, grad);
        }
        if (!std::isfinite(cost))
            throw TrainingError(stage + ": diverged (non-finite cost) at iteration " +
                                std::to_string(iter));
        if (curve) curve->push_back(cost);
        res.iterations = iter;
        if (std::abs(prev - cost) <= ctl.tol * std::max(1.0, std::abs(prev))) break;
    }
    res.final_cost = cost;
    return res;
}

} // namespace cardlv
