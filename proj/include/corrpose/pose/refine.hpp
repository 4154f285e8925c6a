#pragma once

#include <Eigen/Dense>
#include <vector>

#include "corrpose/corr/query_image.hpp"
#include "corrpose/error.hpp"
#include "corrpose/geometry/camera.hpp"
#include "corrpose/geometry/point_render.hpp"
#include "corrpose/opt/bfgs.hpp"

namespace corrpose {

struct RefineResult {
    Pose pose;
    std::vector<double> objective_trace;  // maximized objective per iterate
    bool converged = false;
    int iterations = 0;
};

namespace detail {

/// Bilinear sample of a pixel-major (H*W) x C matrix at continuous (u, v),
/// clamped to the border. Also emits the in-cell derivative weights.
struct BilinearSample {
    VecX value;
    VecX du;
    VecX dv;
};

inline BilinearSample bilinear(const MatX& grid, int height, int width, double u, double v) {
    const double uc = std::min(std::max(u, 0.0), static_cast<double>(width - 1));
    const double vc = std::min(std::max(v, 0.0), static_cast<double>(height - 1));
    const bool u_clamped = uc != u;
    const bool v_clamped = vc != v;
    const int c0 = std::min(static_cast<int>(std::floor(uc)), width - 2 < 0 ? 0 : width - 2);
    const int r0 = std::min(static_cast<int>(std::floor(vc)), height - 2 < 0 ? 0 : height - 2);
    const int c1 = std::min(c0 + 1, width - 1);
    const int r1 = std::min(r0 + 1, height - 1);
    const double fu = uc - c0;
    const double fv = vc - r0;

    const auto row = [&](int r, int c) { return grid.row(static_cast<Eigen::Index>(r) * width + c); };
    BilinearSample out;
    out.value = ((1.0 - fv) * ((1.0 - fu) * row(r0, c0) + fu * row(r0, c1)) +
                 fv * ((1.0 - fu) * row(r1, c0) + fu * row(r1, c1)))
                    .transpose();
    out.du = u_clamped ? VecX::Zero(grid.cols())
                       : VecX(((1.0 - fv) * (row(r0, c1) - row(r0, c0)) +
                               fv * (row(r1, c1) - row(r1, c0)))
                                  .transpose());
    out.dv = v_clamped ? VecX::Zero(grid.cols())
                       : VecX(((1.0 - fu) * (row(r1, c0) - row(r0, c0)) +
                               fu * (row(r1, c1) - row(r0, c1)))
                                  .transpose());
    return out;
}

}  // namespace detail

/// Refinement objective: mean over the fixed visible coordinates of
/// q(pi(x))^T k - log_denominator(pi(x)), with q and the denominator image
/// bilinearly interpolated at the projection of each coordinate under the
/// current pose. Exposed for gradient tests.
class RefineObjective {
public:
    RefineObjective(const QueryImage& query_image, const VecX& log_denominator,
                    const MatX& visible_coords, const MatX& visible_keys, const Camera& camera,
                    const Pose& initial)
        : query_image_(query_image), visible_coords_(visible_coords), visible_keys_(visible_keys),
          camera_(camera), initial_(initial) {
        log_den_grid_ = log_denominator;
    }

    /// theta = (axis-angle increment, translation increment) about the
    /// initial pose. Returns the MAXIMIZED objective; gradient matches.
    double evaluate(const Eigen::VectorXd& theta, Eigen::VectorXd* gradient) const {
        const Vec3 omega = theta.head<3>();
        const Vec3 tau = theta.tail<3>();
        const Mat3 r_delta = so3_exp(omega);
        const Mat3 rot = r_delta * initial_.rotation;
        const Vec3 trans = initial_.translation + tau;
        const Mat3 jl = so3_left_jacobian(omega);

        const Eigen::Index m = visible_coords_.rows();
        double total = 0.0;
        Eigen::VectorXd grad = Eigen::VectorXd::Zero(6);
        const double inv_m = 1.0 / static_cast<double>(m);
        for (Eigen::Index j = 0; j < m; ++j) {
            const Vec3 x = rot * visible_coords_.row(j).transpose() + trans;
            const double z = std::max(x.z(), 1e-6);
            const double u = camera_.fx * x.x() / z + camera_.cx;
            const double v = camera_.fy * x.y() / z + camera_.cy;

            const auto q = detail::bilinear(query_image_.queries, query_image_.height,
                                            query_image_.width, u, v);
            const auto ld = detail::bilinear(log_den_grid_, query_image_.height,
                                             query_image_.width, u, v);
            const VecX key = visible_keys_.row(j).transpose();
            total += q.value.dot(key) - ld.value[0];

            if (!gradient) continue;
            const double dterm_du = q.du.dot(key) - ld.du[0];
            const double dterm_dv = q.dv.dot(key) - ld.dv[0];
            // Projection Jacobian, rows d(u,v)/dx.
            Eigen::Matrix<double, 2, 3> proj;
            proj << camera_.fx / z, 0.0, -camera_.fx * x.x() / (z * z),
                    0.0, camera_.fy / z, -camera_.fy * x.y() / (z * z);
            const Eigen::RowVector3d dterm_dx =
                dterm_du * proj.row(0) + dterm_dv * proj.row(1);
            // x = exp([omega]x) R0 c + t0 + tau:
            //   dx/domega = -[x - trans]x J_l(omega), dx/dtau = I.
            grad.head<3>() +=
                (dterm_dx * (-skew(x - trans) * jl)).transpose() * inv_m;
            grad.tail<3>() += dterm_dx.transpose() * inv_m;
        }
        if (gradient) *gradient = grad;
        return total * inv_m;
    }

private:
    const QueryImage& query_image_;
    MatX log_den_grid_;  // (H*W) x 1
    const MatX& visible_coords_;
    const MatX& visible_keys_;
    const Camera& camera_;
    Pose initial_;
};

/// Local maximization of the correspondence objective with BFGS, starting
/// from `initial`. The visible coordinate set is rendered once at the initial
/// pose and stays fixed, so large corrections that change the visible surface
/// are out of scope by design.
inline RefineResult refine(const Pose& initial, const QueryImage& query_image,
                           const VecX& log_denominator, const MatX& visible_coords,
                           const MatX& visible_keys, const Camera& camera) {
    if (visible_coords.rows() == 0) {
        raise(ErrorCode::EmptyVisibleSet, "initial pose renders no visible surface");
    }
    if (visible_coords.rows() != visible_keys.rows()) {
        raise(ErrorCode::ShapeMismatch, "coords/keys row mismatch");
    }
    const RefineObjective objective(query_image, log_denominator, visible_coords, visible_keys,
                                    camera, initial);

    BfgsOptions options;
    options.max_iterations = 100;
    options.gradient_tolerance = 1e-6;
    const auto negated = [&objective](const Eigen::VectorXd& theta, Eigen::VectorXd& grad) {
        const double value = objective.evaluate(theta, &grad);
        grad = -grad;
        return -value;
    };
    const auto solution = bfgs_minimize(negated, Eigen::VectorXd::Zero(6), options);

    RefineResult result;
    const Vec3 omega = solution.x.head<3>();
    const Vec3 tau = solution.x.tail<3>();
    result.pose = Pose(so3_exp(omega) * initial.rotation, initial.translation + tau);
    result.objective_trace.reserve(solution.trace.size());
    for (double v : solution.trace) result.objective_trace.push_back(-v);
    result.converged = solution.converged;
    result.iterations = solution.iterations;
    return result;
}

}  // namespace corrpose
