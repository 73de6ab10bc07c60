#include "nvmask/least_squares.hpp"

#include <algorithm>
#include <cmath>

namespace nvmask {

namespace {

Eigen::VectorXd project(Eigen::VectorXd x, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi)
{
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], lo[i], hi[i]);
    return x;
}

Eigen::MatrixXd jacobian(const ResidualFn& f, const Eigen::VectorXd& x, const Eigen::VectorXd& lo,
                         const Eigen::VectorXd& hi, Eigen::Index m)
{
    Eigen::MatrixXd J(m, x.size());
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        const double h = 1e-6 * std::max(std::abs(x[j]), 1e-4);
        Eigen::VectorXd xp = x, xm = x;
        xp[j] = std::min(x[j] + h, hi[j]);
        xm[j] = std::max(x[j] - h, lo[j]);
        const double span = xp[j] - xm[j];
        if (span <= 0.0) {
            J.col(j).setZero();
            continue;
        }
        J.col(j) = (f(xp) - f(xm)) / span;
    }
    return J;
}

} // namespace

LmResult levenberg_marquardt(const ResidualFn& residuals, Eigen::VectorXd x0, const Eigen::VectorXd& lower,
                             const Eigen::VectorXd& upper, const LmOptions& options)
{
    LmResult out;
    Eigen::VectorXd x = project(std::move(x0), lower, upper);
    Eigen::VectorXd r = residuals(x);
    double cost = 0.5 * r.squaredNorm();
    double lambda = options.initial_damping;
    const Eigen::Index n = x.size();

    for (int it = 0; it < options.max_iterations; ++it) {
        out.iterations = it + 1;
        if (!std::isfinite(cost)) break;
        if (cost <= 1e-32) {
            out.converged = true;
            break;
        }
        const Eigen::MatrixXd J = jacobian(residuals, x, lower, upper, r.size());
        Eigen::MatrixXd A = J.transpose() * J;
        Eigen::VectorXd g = J.transpose() * r;
        // freeze parameters pinned at a bound by a gradient pointing outward;
        // projecting their steps instead stalls the iteration
        for (Eigen::Index i = 0; i < n; ++i) {
            if ((x[i] <= lower[i] && g[i] > 0.0) || (x[i] >= upper[i] && g[i] < 0.0)) {
                A.row(i).setZero();
                A.col(i).setZero();
                A(i, i) = 1.0;
                g[i] = 0.0;
            }
        }
        if (g.lpNorm<Eigen::Infinity>() <= 1e-300) {
            out.converged = true;
            break;
        }

        bool improved = false;
        for (int attempt = 0; attempt < 40; ++attempt) {
            Eigen::MatrixXd M = A;
            for (Eigen::Index i = 0; i < n; ++i) M(i, i) += lambda * std::max(A(i, i), 1e-12);
            const Eigen::VectorXd step = M.ldlt().solve(-g);
            const Eigen::VectorXd x_new = project(x + step, lower, upper);
            const Eigen::VectorXd r_new = residuals(x_new);
            const double cost_new = 0.5 * r_new.squaredNorm();
            if (std::isfinite(cost_new) && cost_new < cost) {
                const double rel_cost = (cost - cost_new) / std::max(cost, 1e-300);
                const double rel_step = (x_new - x).norm() / std::max(x.norm(), 1e-300);
                x = x_new;
                r = r_new;
                cost = cost_new;
                lambda = std::max(lambda / 3.0, 1e-15);
                improved = true;
                if (rel_cost < options.cost_tolerance || rel_step < options.step_tolerance) out.converged = true;
                break;
            }
            lambda *= 4.0;
        }
        if (!improved) {
            // no downhill step at any damping: we are at a (possibly bounded) minimum
            out.converged = true;
            break;
        }
        if (out.converged) break;
    }

    out.params = x;
    out.cost = cost;
    return out;
}

} // namespace nvmask
