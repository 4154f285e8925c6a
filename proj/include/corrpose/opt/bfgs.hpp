#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

namespace corrpose {

struct BfgsOptions {
    int max_iterations = 100;
    double gradient_tolerance = 1e-6;
    int max_line_search_steps = 30;
};

struct BfgsResult {
    Eigen::VectorXd x;
    double value = 0.0;                 // final objective value
    std::vector<double> trace;          // objective value per accepted iterate
    bool converged = false;             // gradient tolerance reached
    int iterations = 0;
};

/// Dense BFGS minimizer with Armijo backtracking. The curvature pair is
/// skipped when s.y is not positive, which keeps the inverse Hessian positive
/// definite on piecewise-smooth objectives (bilinear interpolation kinks).
inline BfgsResult bfgs_minimize(
    const std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>& value_and_gradient,
    const Eigen::VectorXd& x0, const BfgsOptions& options = {}) {
    const Eigen::Index n = x0.size();
    BfgsResult result;
    result.x = x0;

    Eigen::MatrixXd h_inv = Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd grad(n);
    double fx = value_and_gradient(result.x, grad);
    result.trace.push_back(fx);

    const double c1 = 1e-4;
    for (int it = 0; it < options.max_iterations; ++it) {
        if (grad.norm() < options.gradient_tolerance) {
            result.converged = true;
            break;
        }
        Eigen::VectorXd direction = -(h_inv * grad);
        double slope = grad.dot(direction);
        if (slope >= 0.0) {
            // Reset on a non-descent direction.
            h_inv.setIdentity();
            direction = -grad;
            slope = grad.dot(direction);
            if (slope >= 0.0) break;
        }

        double alpha = 1.0;
        double f_new = fx;
        Eigen::VectorXd x_new = result.x;
        Eigen::VectorXd grad_new = grad;
        bool accepted = false;
        for (int ls = 0; ls < options.max_line_search_steps; ++ls) {
            x_new = result.x + alpha * direction;
            f_new = value_and_gradient(x_new, grad_new);
            if (f_new <= fx + c1 * alpha * slope) {
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted) break;

        const Eigen::VectorXd s = x_new - result.x;
        const Eigen::VectorXd y = grad_new - grad;
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            const double rho = 1.0 / sy;
            const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(n, n);
            h_inv = (identity - rho * s * y.transpose()) * h_inv *
                        (identity - rho * y * s.transpose()) +
                    rho * s * s.transpose();
        }
        result.x = x_new;
        fx = f_new;
        grad = grad_new;
        result.iterations = it + 1;
        result.trace.push_back(fx);
    }
    result.value = fx;
    return result;
}

}  // namespace corrpose
