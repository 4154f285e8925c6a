#pragma once

#include <Eigen/Dense>
#include <vector>

#include "corrpose/error.hpp"
#include "corrpose/geometry/pose.hpp"

namespace corrpose {

/// Pinhole intrinsics. Pixel (r, c) has its center at continuous (u, v) = (c, r).
struct Camera {
    double fx = 0.0;
    double fy = 0.0;
    double cx = 0.0;
    double cy = 0.0;
    int width = 0;
    int height = 0;

    Camera() = default;
    Camera(double fx_, double fy_, double cx_, double cy_, int w, int h)
        : fx(fx_), fy(fy_), cx(cx_), cy(cy_), width(w), height(h) {}

    Vec2 project_cam(const Vec3& x_cam) const {
        return Vec2(fx * x_cam.x() / x_cam.z() + cx, fy * x_cam.y() / x_cam.z() + cy);
    }

    Vec3 backproject(const Vec2& pixel, double depth) const {
        return Vec3((pixel.x() - cx) / fx * depth, (pixel.y() - cy) / fy * depth, depth);
    }

    /// Unit ray through a pixel, camera frame, pointing away from the camera.
    Vec3 ray(const Vec2& pixel) const {
        return Vec3((pixel.x() - cx) / fx, (pixel.y() - cy) / fy, 1.0).normalized();
    }

    bool contains(const Vec2& pixel) const {
        return pixel.x() >= -0.5 && pixel.x() < width - 0.5 && pixel.y() >= -0.5 &&
               pixel.y() < height - 0.5;
    }

    /// Camera observing the same rays on a grid whose pixel (r', c') is the
    /// average of the d x d block starting at (r'd, c'd).
    Camera downscaled(int factor) const {
        Camera out = *this;
        out.fx = fx / factor;
        out.fy = fy / factor;
        const double off = (factor - 1) * 0.5;
        out.cx = (cx - off) / factor;
        out.cy = (cy - off) / factor;
        out.width = width / factor;
        out.height = height / factor;
        return out;
    }
};

struct ProjectedPoints {
    // One row per input point.
    Eigen::Matrix<double, Eigen::Dynamic, 2> pixels;
    Eigen::VectorXd depths;
};

/// Project object-frame points through pose and camera.
/// Throws NonPositiveDepth if any transformed point has z <= 1e-9.
inline ProjectedPoints project(const Pose& pose, const Camera& camera,
                               const Eigen::Matrix<double, Eigen::Dynamic, 3>& points) {
    ProjectedPoints out;
    const Eigen::Index n = points.rows();
    out.pixels.resize(n, 2);
    out.depths.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Vec3 x_cam = pose.apply(points.row(i).transpose());
        if (x_cam.z() <= 1e-9) {
            raise(ErrorCode::NonPositiveDepth,
                  "point " + std::to_string(i) + " has depth " + std::to_string(x_cam.z()));
        }
        out.pixels(i, 0) = camera.fx * x_cam.x() / x_cam.z() + camera.cx;
        out.pixels(i, 1) = camera.fy * x_cam.y() / x_cam.z() + camera.cy;
        out.depths[i] = x_cam.z();
    }
    return out;
}

}  // namespace corrpose
