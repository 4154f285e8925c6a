#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <vector>

#include "corrpose/corr/query_image.hpp"
#include "corrpose/error.hpp"
#include "corrpose/geometry/point_render.hpp"

namespace corrpose {

/// Depth adjustment from an observed depth image registered to the query
/// grid. Pixels whose query norm reaches 80% of the image maximum are trusted
/// as confidently-on-object; the pose is translated along the ray through
/// their center of mass so its depth changes by the median of the per-pixel
/// (observed - rendered) differences.
inline Pose depth_adjust(const Pose& pose, const QueryImage& query_image,
                         const ImageF& depth_observed, const Camera& camera,
                         const SurfaceSampleSet& surface) {
    if (depth_observed.height() != query_image.height ||
        depth_observed.width() != query_image.width) {
        raise(ErrorCode::ShapeMismatch, "depth image is not on the query grid");
    }
    const Eigen::Index pixels = query_image.queries.rows();
    VecX norms(pixels);
    for (Eigen::Index p = 0; p < pixels; ++p) norms[p] = query_image.queries.row(p).norm();
    const double limit = 0.8 * norms.maxCoeff();

    std::vector<Eigen::Index> confident;
    for (Eigen::Index p = 0; p < pixels; ++p) {
        if (norms[p] >= limit && norms[p] > 0.0) confident.push_back(p);
    }
    if (confident.empty()) raise(ErrorCode::NoConfidentPixels, "no pixel passes the norm threshold");

    const RenderedCrop rendered = render_point_zbuffer(pose, camera, surface);
    std::vector<double> diffs;
    double sum_u = 0.0, sum_v = 0.0;
    for (Eigen::Index p : confident) {
        const int r = static_cast<int>(p / query_image.width);
        const int c = static_cast<int>(p % query_image.width);
        const double observed = depth_observed.at(r, c);
        const double hypothesis = rendered.depth_image.at(r, c);
        if (observed <= 0.0 || hypothesis <= 0.0) continue;
        diffs.push_back(observed - hypothesis);
        sum_u += c;
        sum_v += r;
    }
    if (diffs.empty()) raise(ErrorCode::NoDepthOverlap, "no confident pixel has both depths");

    const std::size_t mid = diffs.size() / 2;
    std::nth_element(diffs.begin(), diffs.begin() + static_cast<std::ptrdiff_t>(mid), diffs.end());
    double median = diffs[mid];
    if (diffs.size() % 2 == 0) {
        const double lower =
            *std::max_element(diffs.begin(), diffs.begin() + static_cast<std::ptrdiff_t>(mid));
        median = 0.5 * (median + lower);
    }

    const double inv_n = 1.0 / static_cast<double>(diffs.size());
    const Vec3 ray = camera.ray(Vec2(sum_u * inv_n, sum_v * inv_n));
    // Step along the ray sized so the depth (z) changes by exactly the median.
    Pose adjusted = pose;
    adjusted.translation += ray * (median / ray.z());
    return adjusted;
}

}  // namespace corrpose
