#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <vector>

#include "corrpose/geometry/camera.hpp"
#include "corrpose/geometry/pose.hpp"
#include "corrpose/geometry/surface_sampling.hpp"
#include "corrpose/io/image.hpp"

namespace corrpose {

/// One rendered view of an object. Masks are stored explicitly; the NaN
/// sentinel in coord_image marks background but is never used for control
/// flow. feature_image is filled by the synthetic feature renderer and stays
/// empty for plain geometry renders.
struct RenderedCrop {
    ImageF coord_image;    // H x W x 3, object-frame coordinates, NaN outside full_mask
    ImageB visible_mask;   // H x W, object is the nearest surface
    ImageB full_mask;      // H x W, object present even if occluded
    ImageF normal_image;   // H x W x 3, camera-frame normals of the object surface
    ImageF depth_image;    // H x W, scene depth, 0 where nothing is present
    ImageF feature_image;  // H x W x F, query-model input channels
    ImageI index_image;    // H x W, winning surface-sample index, -1 background
    bool sparse_surface_warning = false;
    double hole_fraction = 0.0;
};

namespace detail {

struct ZBuffer {
    ImageD depth;
    ImageI index;

    ZBuffer(int height, int width)
        : depth(height, width, 1, std::numeric_limits<double>::infinity()),
          index(height, width, 1, -1) {}
};

/// Splat every projected sample into a euclidean disk with a per-pixel depth
/// test. The footprint is measured from the sample's continuous projection
/// with effective radius 0.85 * window: enough to close the worst lattice gap
/// at the supported density (spacing projects to <= window pixels) while
/// dilating the silhouette by well under a pixel per window unit.
inline void splat_points(const ProjectedPoints& proj, int window, ZBuffer& zb) {
    const int h = zb.depth.height();
    const int w = zb.depth.width();
    const double r2_limit = 0.85 * window * 0.85 * window;
    for (Eigen::Index i = 0; i < proj.depths.size(); ++i) {
        const double u = proj.pixels(i, 0);
        const double v = proj.pixels(i, 1);
        const int c0 = static_cast<int>(std::floor(u + 0.5));
        const int r0 = static_cast<int>(std::floor(v + 0.5));
        if (c0 + window < 0 || c0 - window >= w || r0 + window < 0 || r0 - window >= h) continue;
        const double z = proj.depths[i];
        for (int dr = -window; dr <= window; ++dr) {
            for (int dc = -window; dc <= window; ++dc) {
                const int r = r0 + dr;
                const int c = c0 + dc;
                const double dx = c - u;
                const double dy = r - v;
                if (dx * dx + dy * dy > r2_limit && !(dr == 0 && dc == 0)) continue;
                if (!zb.depth.in_bounds(r, c)) continue;
                if (z < zb.depth.at(r, c)) {
                    zb.depth.at(r, c) = z;
                    zb.index.at(r, c) = static_cast<int>(i);
                }
            }
        }
    }
}

inline int splat_radius(const SurfaceSampleSet& surface, const Camera& camera,
                        const Eigen::VectorXd& depths) {
    if (depths.size() == 0) return 1;
    std::vector<double> d(depths.data(), depths.data() + depths.size());
    const std::size_t mid = d.size() / 2;
    std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(mid), d.end());
    const double median_depth = d[mid];
    const double f = 0.5 * (camera.fx + camera.fy);
    const int r = static_cast<int>(std::ceil(surface.nominal_spacing * f / median_depth));
    return std::clamp(r, 1, 3);
}

}  // namespace detail

/// Point-projection z-buffer render of a surface sample set. Fills the
/// visible-layer fields of RenderedCrop, with full_mask == visible_mask.
/// Samples behind the camera are skipped, so any pose yields a render
/// (possibly all background) rather than an error.
inline RenderedCrop render_point_zbuffer(const Pose& pose, const Camera& camera,
                                         const SurfaceSampleSet& surface) {
    const int h = camera.height;
    const int w = camera.width;
    RenderedCrop crop;
    crop.coord_image = ImageF(h, w, 3, std::numeric_limits<float>::quiet_NaN());
    crop.visible_mask = ImageB(h, w, 1, 0);
    crop.full_mask = ImageB(h, w, 1, 0);
    crop.normal_image = ImageF(h, w, 3, 0.0f);
    crop.depth_image = ImageF(h, w, 1, 0.0f);
    crop.index_image = ImageI(h, w, 1, -1);
    if (surface.size() == 0) return crop;

    // Project in front-of-camera subset.
    ProjectedPoints proj;
    std::vector<int> kept;
    kept.reserve(static_cast<std::size_t>(surface.size()));
    std::vector<Eigen::Vector2d> pix;
    std::vector<double> dep;
    for (Eigen::Index i = 0; i < surface.size(); ++i) {
        const Vec3 x_cam = pose.apply(surface.point(i));
        if (x_cam.z() <= 1e-9) continue;
        pix.emplace_back(camera.fx * x_cam.x() / x_cam.z() + camera.cx,
                         camera.fy * x_cam.y() / x_cam.z() + camera.cy);
        dep.push_back(x_cam.z());
        kept.push_back(static_cast<int>(i));
    }
    const Eigen::Index n = static_cast<Eigen::Index>(kept.size());
    if (n == 0) return crop;
    proj.pixels.resize(n, 2);
    proj.depths.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        proj.pixels.row(i) = pix[static_cast<std::size_t>(i)].transpose();
        proj.depths[i] = dep[static_cast<std::size_t>(i)];
    }

    const int radius = detail::splat_radius(surface, camera, proj.depths);
    detail::ZBuffer zb(h, w);
    detail::splat_points(proj, radius, zb);

    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const int local = zb.index.at(r, c);
            if (local < 0) continue;
            const int i = kept[static_cast<std::size_t>(local)];
            crop.visible_mask.at(r, c) = 1;
            crop.full_mask.at(r, c) = 1;
            crop.depth_image.at(r, c) = static_cast<float>(zb.depth.at(r, c));
            crop.index_image.at(r, c) = i;
            const Vec3 p = surface.point(i);
            const Vec3 nrm = pose.rotation * surface.normal(i);
            for (int ch = 0; ch < 3; ++ch) {
                crop.coord_image.at(r, c, ch) = static_cast<float>(p[ch]);
                crop.normal_image.at(r, c, ch) = static_cast<float>(nrm[ch]);
            }
        }
    }

    // Hole diagnostic: pixels inside the mask's morphological closing that the
    // splat left uncovered. In the supported density regime (spacing projects
    // to <= 2 px) the computed splat radius fills everything and this is zero.
    ImageB dilated(h, w, 1, 0);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            if (!crop.visible_mask.at(r, c)) continue;
            for (int dr = -1; dr <= 1; ++dr) {
                for (int dc = -1; dc <= 1; ++dc) {
                    if (dilated.in_bounds(r + dr, c + dc)) dilated.at(r + dr, c + dc) = 1;
                }
            }
        }
    }
    std::size_t interior = 0;
    std::size_t holes = 0;
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            bool eroded = true;
            for (int dr = -1; dr <= 1 && eroded; ++dr) {
                for (int dc = -1; dc <= 1; ++dc) {
                    const int rr = r + dr, cc = c + dc;
                    if (dilated.in_bounds(rr, cc) && !dilated.at(rr, cc)) {
                        eroded = false;
                        break;
                    }
                }
            }
            if (!eroded) continue;
            ++interior;
            if (!crop.visible_mask.at(r, c)) ++holes;
        }
    }
    crop.hole_fraction = interior > 0 ? static_cast<double>(holes) / static_cast<double>(interior) : 0.0;
    crop.sparse_surface_warning = crop.hole_fraction > 0.05;
    return crop;
}

struct VisiblePoint {
    int row = 0;
    int col = 0;
    int sample_index = -1;
    Vec3 coord = Vec3::Zero();
    Vec3 normal = Vec3::Zero();  // object frame
};

/// Sparse view of render_point_zbuffer restricted to the visible mask.
/// With direct_only, keeps only samples whose continuous projection rounds to
/// the pixel they won: splatting lets grazing rim samples claim pixels up to
/// the footprint radius away, and those artificial ownerships bias objectives
/// that treat each pixel's sample as "the surface seen at this pixel".
inline std::vector<VisiblePoint> visible_coordinates(const Pose& pose, const Camera& camera,
                                                     const SurfaceSampleSet& surface,
                                                     bool direct_only = false) {
    const RenderedCrop crop = render_point_zbuffer(pose, camera, surface);
    std::vector<VisiblePoint> out;
    for (int r = 0; r < crop.visible_mask.height(); ++r) {
        for (int c = 0; c < crop.visible_mask.width(); ++c) {
            if (!crop.visible_mask.at(r, c)) continue;
            VisiblePoint vp;
            vp.row = r;
            vp.col = c;
            vp.sample_index = crop.index_image.at(r, c);
            vp.coord = surface.point(vp.sample_index);
            vp.normal = surface.normal(vp.sample_index);
            if (direct_only) {
                const Vec3 x_cam = pose.apply(vp.coord);
                const Vec2 px = camera.project_cam(x_cam);
                if (static_cast<int>(std::floor(px.x() + 0.5)) != c ||
                    static_cast<int>(std::floor(px.y() + 0.5)) != r) {
                    continue;
                }
            }
            out.push_back(vp);
        }
    }
    return out;
}

}  // namespace corrpose
