#pragma once

#include <Eigen/Core>
#include <functional>
#include <string>
#include <vector>

namespace cardlv {

enum class OptMethod {
    gradient_descent,  ///< steepest descent with backtracking (or fixed step)
    lbfgs,             ///< limited-memory BFGS with the same backtracking acceptance
};

/// Shared knobs for the full-batch optimization stages.
struct TrainControl {
    int max_iters = 200;
    double step = 0.5;        ///< initial step size, restored every iteration
    bool line_search = true;  ///< backtracking: halve until the cost does not increase
    double tol = 1e-7;        ///< stop when |dJ| <= tol * max(1, |J|)
    int max_halvings = 20;
    OptMethod method = OptMethod::gradient_descent;
    int lbfgs_history = 10;
};

/// One accepted cost value per iteration, index 0 holding the initial cost.
using TrainingCurve = std::vector<double>;

struct CostFunction {
    /// Cost only; used for line-search trials.
    std::function<double(const Eigen::VectorXd&)> cost;
    /// Cost and gradient at the same point.
    std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)> cost_grad;
};

struct DescentResult {
    double initial_cost = 0.0;
    double final_cost = 0.0;
    int iterations = 0;
};

/// Minimizes f over x in place. With line_search on, the accepted cost sequence
/// is non-increasing; divergence (non-finite cost) raises TrainingError naming
/// the stage.
DescentResult minimize(Eigen::VectorXd& x, const CostFunction& f, const TrainControl& ctl,
                       const std::string& stage, TrainingCurve* curve = nullptr);

} // namespace cardlv
