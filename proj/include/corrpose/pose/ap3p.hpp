#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <array>
#include <cmath>
#include <vector>

#include "corrpose/error.hpp"
#include "corrpose/geometry/camera.hpp"
#include "corrpose/geometry/pose.hpp"

namespace corrpose {

namespace detail {

/// Real roots of c[0] + c[1] x + c[2] x^2 + c[3] x^3 + c[4] x^4 via the
/// companion matrix, each polished with a few Newton steps.
inline std::vector<double> real_quartic_roots(const std::array<double, 5>& c) {
    int degree = 4;
    while (degree > 0 && std::abs(c[static_cast<std::size_t>(degree)]) <
                             1e-14 * std::max({std::abs(c[0]), std::abs(c[1]), std::abs(c[2]),
                                               std::abs(c[3]), std::abs(c[4])})) {
        --degree;
    }
    std::vector<double> roots;
    if (degree == 0) return roots;

    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(degree, degree);
    for (int i = 0; i < degree; ++i) {
        companion(0, i) = -c[static_cast<std::size_t>(degree - 1 - i)] / c[static_cast<std::size_t>(degree)];
    }
    for (int i = 1; i < degree; ++i) companion(i, i - 1) = 1.0;
    const Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);

    const auto eval = [&c](double x, double& p, double& dp) {
        p = ((c[4] * x + c[3]) * x + c[2]) * x + c[1];
        p = p * x + c[0];
        dp = ((4.0 * c[4] * x + 3.0 * c[3]) * x + 2.0 * c[2]) * x + c[1];
    };
    for (int i = 0; i < degree; ++i) {
        const auto ev = solver.eigenvalues()[i];
        if (std::abs(ev.imag()) > 1e-8 * (1.0 + std::abs(ev.real()))) continue;
        double x = ev.real();
        for (int it = 0; it < 3; ++it) {
            double p, dp;
            eval(x, p, dp);
            if (std::abs(dp) < 1e-300) break;
            const double step = p / dp;
            x -= step;
            if (std::abs(step) < 1e-15 * (1.0 + std::abs(x))) break;
        }
        roots.push_back(x);
    }
    return roots;
}

/// Absolute orientation for exact 3-point correspondences (Kabsch).
inline Pose absolute_orientation(const std::array<Vec3, 3>& object_points,
                                 const std::array<Vec3, 3>& camera_points) {
    const Vec3 obj_centroid = (object_points[0] + object_points[1] + object_points[2]) / 3.0;
    const Vec3 cam_centroid = (camera_points[0] + camera_points[1] + camera_points[2]) / 3.0;
    Mat3 h = Mat3::Zero();
    for (int i = 0; i < 3; ++i) {
        h += (object_points[static_cast<std::size_t>(i)] - obj_centroid) *
             (camera_points[static_cast<std::size_t>(i)] - cam_centroid).transpose();
    }
    const Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 d = Mat3::Identity();
    d(2, 2) = (svd.matrixV() * svd.matrixU().transpose()).determinant() > 0 ? 1.0 : -1.0;
    const Mat3 r = svd.matrixV() * d * svd.matrixU().transpose();
    return Pose(r, cam_centroid - r * obj_centroid);
}

}  // namespace detail

/// Perspective-three-point solver. Takes three pixel observations and three
/// object points, returns every pose (up to four) with positive depths whose
/// reprojection interpolates the pixels exactly.
///
/// The depth-ratio quartic is assembled by direct elimination of the
/// law-of-cosines system, so the coefficients are correct by construction;
/// roots come from the companion matrix with Newton polish, and the depth
/// triple is finished with Gauss-Newton before the closed-form alignment.
inline std::vector<Pose> ap3p(const Eigen::Matrix<double, 3, 2>& image_points,
                              const Eigen::Matrix3d& object_points, const Camera& camera) {
    const Vec3 p1 = object_points.row(0).transpose();
    const Vec3 p2 = object_points.row(1).transpose();
    const Vec3 p3 = object_points.row(2).transpose();

    const double scale = std::max({(p2 - p1).norm(), (p3 - p1).norm(), (p3 - p2).norm()});
    if (scale <= 0.0 || (p2 - p1).cross(p3 - p1).norm() < 1e-9 * scale * scale) {
        raise(ErrorCode::DegenerateConfiguration, "object points are collinear");
    }

    std::array<Vec3, 3> f;
    for (int i = 0; i < 3; ++i) {
        f[static_cast<std::size_t>(i)] = camera.ray(image_points.row(i).transpose());
    }
    for (int i = 0; i < 3; ++i) {
        for (int j = i + 1; j < 3; ++j) {
            if (f[static_cast<std::size_t>(i)].dot(f[static_cast<std::size_t>(j)]) > 1.0 - 1e-12) {
                raise(ErrorCode::DegenerateConfiguration, "coincident observation rays");
            }
        }
    }

    // Law of cosines with depths s1, s2 = u s1, s3 = v s1:
    //   s2^2 + s3^2 - s2 s3 p = a^2,  p = 2 f2.f3,  a = |P2 - P3|
    //   s1^2 + s3^2 - s1 s3 q = b^2,  q = 2 f1.f3,  b = |P1 - P3|
    //   s1^2 + s2^2 - s1 s2 r = c^2,  r = 2 f1.f2,  c = |P1 - P2|
    const double a2 = (p2 - p3).squaredNorm();
    const double b2 = (p1 - p3).squaredNorm();
    const double c2 = (p1 - p2).squaredNorm();
    const double p = 2.0 * f[1].dot(f[2]);
    const double q = 2.0 * f[0].dot(f[2]);
    const double r = 2.0 * f[0].dot(f[1]);

    // Eq A (from the b/c pair):  b2 u^2 - b2 r u + S(v) = 0,
    //   S(v) = -c2 v^2 + c2 q v + (b2 - c2).
    // Eq B (from the a/b pair):  b2 u^2 - b2 p u v + (b2 - a2) v^2 + a2 q v - a2 = 0.
    // (Eq A) - (Eq B) is linear in u:  u D(v) = N(v) with
    //   D(v) = b2 r - b2 p v,
    //   N(v) = S(v) - (b2 - a2) v^2 - a2 q v + a2.
    // Substituting back into Eq A and clearing D^2 gives the quartic in v:
    //   b2 N^2 - b2 r N D + S D^2 = 0.
    // Coefficient arrays are indexed by the power of v.
    const std::array<double, 3> s_poly = {b2 - c2, c2 * q, -c2};
    const std::array<double, 3> big_n = {s_poly[0] + a2, s_poly[1] - a2 * q,
                                         s_poly[2] - (b2 - a2)};
    const std::array<double, 2> big_d = {b2 * r, -b2 * p};

    std::array<double, 5> quartic{};
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            quartic[static_cast<std::size_t>(i + j)] += b2 * big_n[static_cast<std::size_t>(i)] *
                                                        big_n[static_cast<std::size_t>(j)];
        }
    }
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 2; ++j) {
            quartic[static_cast<std::size_t>(i + j)] -= b2 * r * big_n[static_cast<std::size_t>(i)] *
                                                        big_d[static_cast<std::size_t>(j)];
        }
    }
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 2; ++j) {
            for (int k = 0; k < 2; ++k) {
                quartic[static_cast<std::size_t>(i + j + k)] +=
                    s_poly[static_cast<std::size_t>(i)] * big_d[static_cast<std::size_t>(j)] *
                    big_d[static_cast<std::size_t>(k)];
            }
        }
    }

    const auto roots = detail::real_quartic_roots(quartic);
    std::vector<Pose> poses;
    std::vector<Eigen::Vector3d> accepted_depths;
    for (double v : roots) {
        if (!(v > 0.0) || !std::isfinite(v)) continue;
        const double d_at_v = big_d[0] + big_d[1] * v;
        std::vector<double> u_candidates;
        if (std::abs(d_at_v) > 1e-10 * (std::abs(big_d[0]) + std::abs(big_d[1] * v) + 1e-30)) {
            u_candidates.push_back(
                ((big_n[0] + big_n[1] * v) + big_n[2] * v * v) / d_at_v);
        } else {
            // Fall back to the quadratic Eq A in u when the linear relation
            // degenerates (p v ~ r).
            const double s_at_v = s_poly[0] + s_poly[1] * v + s_poly[2] * v * v;
            const double disc = b2 * b2 * r * r - 4.0 * b2 * s_at_v;
            if (disc < 0.0) continue;
            const double sq = std::sqrt(disc);
            u_candidates.push_back((b2 * r + sq) / (2.0 * b2));
            u_candidates.push_back((b2 * r - sq) / (2.0 * b2));
        }
        for (double u : u_candidates) {
            if (!(u > 0.0) || !std::isfinite(u)) continue;
            const double denom = 1.0 + v * v - v * q;
            if (!(denom > 0.0)) continue;
            double s1 = std::sqrt(b2 / denom);
            double s2 = u * s1;
            double s3 = v * s1;

            // Gauss-Newton polish of the depth triple on the cosine system.
            for (int it = 0; it < 5; ++it) {
                const Vec3 g(s2 * s2 + s3 * s3 - s2 * s3 * p - a2,
                             s1 * s1 + s3 * s3 - s1 * s3 * q - b2,
                             s1 * s1 + s2 * s2 - s1 * s2 * r - c2);
                if (g.cwiseAbs().maxCoeff() < 1e-14 * scale * scale) break;
                Mat3 jac;
                jac << 0.0, 2.0 * s2 - s3 * p, 2.0 * s3 - s2 * p,
                       2.0 * s1 - s3 * q, 0.0, 2.0 * s3 - s1 * q,
                       2.0 * s1 - s2 * r, 2.0 * s2 - s1 * r, 0.0;
                const Vec3 step = jac.fullPivLu().solve(g);
                if (!step.allFinite()) break;
                s1 -= step[0];
                s2 -= step[1];
                s3 -= step[2];
            }
            if (!(s1 > 0.0 && s2 > 0.0 && s3 > 0.0)) continue;

            const std::array<Vec3, 3> camera_points = {s1 * f[0], s2 * f[1], s3 * f[2]};
            const Pose pose =
                detail::absolute_orientation({p1, p2, p3}, camera_points);

            // Keep only poses that actually interpolate the observations.
            double residual = 0.0;
            bool ok = true;
            for (int i = 0; i < 3; ++i) {
                const Vec3 x_cam = pose.apply(object_points.row(i).transpose());
                if (x_cam.z() <= 0.0) {
                    ok = false;
                    break;
                }
                const Vec2 px = camera.project_cam(x_cam);
                residual = std::max(residual, (px - image_points.row(i).transpose()).norm());
            }
            if (!ok || residual > 1e-6) continue;

            bool duplicate = false;
            for (const auto& d : accepted_depths) {
                if ((d - Eigen::Vector3d(s1, s2, s3)).norm() < 1e-7 * scale) {
                    duplicate = true;
                    break;
                }
            }
            if (duplicate) continue;
            accepted_depths.emplace_back(s1, s2, s3);
            poses.push_back(pose);
        }
    }
    if (poses.empty()) {
        raise(ErrorCode::NoRealSolution, "no positive-depth solution interpolates the rays");
    }
    return poses;
}

}  // namespace corrpose
