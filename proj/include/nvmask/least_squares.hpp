#pragma once

#include <Eigen/Dense>

#include <functional>

namespace nvmask {

using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct LmOptions {
    int max_iterations = 1000;
    double cost_tolerance = 1e-12; // relative decrease below which we stop
    double step_tolerance = 1e-10; // relative parameter change
    double initial_damping = 1e-3;
};

struct LmResult {
    Eigen::VectorXd params;
    double cost = 0.0; // 0.5 * sum r^2
    int iterations = 0;
    bool converged = false;
};

/// Box-constrained Levenberg-Marquardt with Marquardt diagonal scaling and a
/// central-difference Jacobian. Steps are projected onto [lower, upper].
LmResult levenberg_marquardt(const ResidualFn& residuals, Eigen::VectorXd x0, const Eigen::VectorXd& lower,
                             const Eigen::VectorXd& upper, const LmOptions& options = {});

} // namespace nvmask
