#pragma once

#include <Eigen/Dense>
#include <limits>

#include "corrpose/geometry/camera.hpp"
#include "corrpose/geometry/mesh.hpp"
#include "corrpose/geometry/point_render.hpp"
#include "corrpose/geometry/pose.hpp"

namespace corrpose {

namespace detail {

/// Moeller-Trumbore ray/triangle intersection. Ray origin is the camera
/// center (object frame), direction unnormalized; returns t or +inf.
inline double ray_triangle(const Vec3& origin, const Vec3& dir, const Triangle& tri) {
    const Vec3 e1 = tri.b - tri.a;
    const Vec3 e2 = tri.c - tri.a;
    const Vec3 pvec = dir.cross(e2);
    const double det = e1.dot(pvec);
    if (std::abs(det) < 1e-14) return std::numeric_limits<double>::infinity();
    const double inv_det = 1.0 / det;
    const Vec3 tvec = origin - tri.a;
    const double u = tvec.dot(pvec) * inv_det;
    if (u < 0.0 || u > 1.0) return std::numeric_limits<double>::infinity();
    const Vec3 qvec = tvec.cross(e1);
    const double v = dir.dot(qvec) * inv_det;
    if (v < 0.0 || u + v > 1.0) return std::numeric_limits<double>::infinity();
    const double t = e2.dot(qvec) * inv_det;
    return t > 1e-9 ? t : std::numeric_limits<double>::infinity();
}

}  // namespace detail

/// Exact per-pixel render of a triangle mesh by ray casting through every
/// pixel center. Slower than point splatting but free of splat dilation;
/// used where geometric exactness matters more than speed (oracle fields).
/// index_image holds the winning TRIANGLE index, not a surface-sample index.
inline RenderedCrop render_mesh_raycast(const Pose& pose, const Camera& camera,
                                        const TriangleMesh& mesh) {
    const int h = camera.height;
    const int w = camera.width;
    RenderedCrop crop;
    crop.coord_image = ImageF(h, w, 3, std::numeric_limits<float>::quiet_NaN());
    crop.visible_mask = ImageB(h, w, 1, 0);
    crop.full_mask = ImageB(h, w, 1, 0);
    crop.normal_image = ImageF(h, w, 3, 0.0f);
    crop.depth_image = ImageF(h, w, 1, 0.0f);
    crop.index_image = ImageI(h, w, 1, -1);

    // Cast in the object frame: origin = -R^T t, direction = R^T ray.
    const Pose inv = pose.inverse();
    const Vec3 origin = inv.translation;
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const Vec3 dir_cam = camera.ray(Vec2(c, r));
            const Vec3 dir = inv.rotation * dir_cam;
            double best_t = std::numeric_limits<double>::infinity();
            int best_tri = -1;
            for (std::size_t k = 0; k < mesh.triangles.size(); ++k) {
                const double t = detail::ray_triangle(origin, dir, mesh.triangles[k]);
                if (t < best_t) {
                    best_t = t;
                    best_tri = static_cast<int>(k);
                }
            }
            if (best_tri < 0) continue;
            const Vec3 point_obj = origin + best_t * dir;
            const Vec3 x_cam = pose.apply(point_obj);
            Vec3 normal_obj = mesh.triangles[static_cast<std::size_t>(best_tri)].normal();
            if (normal_obj.dot(dir) > 0.0) normal_obj = -normal_obj;  // face the camera
            const Vec3 normal_cam = pose.rotation * normal_obj;

            crop.visible_mask.at(r, c) = 1;
            crop.full_mask.at(r, c) = 1;
            crop.depth_image.at(r, c) = static_cast<float>(x_cam.z());
            crop.index_image.at(r, c) = best_tri;
            for (int ch = 0; ch < 3; ++ch) {
                crop.coord_image.at(r, c, ch) = static_cast<float>(point_obj[ch]);
                crop.normal_image.at(r, c, ch) = static_cast<float>(normal_cam[ch]);
            }
        }
    }
    return crop;
}

}  // namespace corrpose
