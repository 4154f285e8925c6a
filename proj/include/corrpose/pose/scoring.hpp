#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>

#include "corrpose/corr/sampling.hpp"
#include "corrpose/corr/table.hpp"
#include "corrpose/geometry/point_render.hpp"

namespace corrpose {

/// Candidate pose with its entropy-normalized combined score and the
/// correspondence triple that produced it.
struct PoseHypothesis {
    Pose pose;
    double score = -std::numeric_limits<double>::infinity();
    double mask_score = 0.0;  // s_M, average mask log likelihood
    double corr_score = 0.0;  // s_C, average correspondence log likelihood
    std::array<CorrespondenceSample, 3> triple{};
    int iteration = -1;
};

/// A hypothesis is plausible only if its supporting surface points face the
/// camera under it: rotated normal against the ray through the pixel.
inline bool visibility_check(const Pose& pose,
                             const std::array<Vec2, 3>& pixels,
                             const std::array<Vec3, 3>& normals, const Camera& camera) {
    for (int i = 0; i < 3; ++i) {
        const Vec3 n_cam = pose.rotation * normals[static_cast<std::size_t>(i)];
        if (n_cam.dot(camera.ray(pixels[static_cast<std::size_t>(i)])) >= 0.0) return false;
    }
    return true;
}

namespace detail {

constexpr double kProbClampLo = 1e-6;
constexpr double kProbClampHi = 1.0 - 1e-6;

inline double clamp_prob(double p) {
    return std::min(kProbClampHi, std::max(kProbClampLo, p));
}

/// s_M over a pre-rendered hypothesis crop.
inline double mask_score_from_crop(const RenderedCrop& crop, const VecX& mask_prob) {
    const int h = crop.visible_mask.height();
    const int w = crop.visible_mask.width();
    double sum = 0.0;
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const double p = mask_prob[static_cast<Eigen::Index>(r) * w + c];
            const double agree = crop.visible_mask.at(r, c) ? p : 1.0 - p;
            sum += std::log(clamp_prob(agree));
        }
    }
    return sum / static_cast<double>(h * w);
}

/// s_C over a pre-rendered hypothesis crop, reading the max-pooled table at
/// each visible pixel's winning surface index.
inline double corr_score_from_crop(const RenderedCrop& crop, const CorrespondenceTable& pooled,
                                   double min_score_floor) {
    double sum = 0.0;
    std::size_t count = 0;
    for (int r = 0; r < crop.visible_mask.height(); ++r) {
        for (int c = 0; c < crop.visible_mask.width(); ++c) {
            if (!crop.visible_mask.at(r, c)) continue;
            const double p = static_cast<double>(pooled.at(r, c, crop.index_image.at(r, c)));
            sum += std::max(min_score_floor, std::log(std::max(p, 1e-300)));
            ++count;
        }
    }
    if (count == 0) return min_score_floor;
    return sum / static_cast<double>(count);
}

}  // namespace detail

/// Average log likelihood of the point-projected hypothesis mask under the
/// predicted per-pixel mask probabilities, over every pixel of the crop.
inline double mask_score(const Pose& pose, const Camera& camera, const SurfaceSampleSet& surface,
                         const VecX& mask_prob) {
    return detail::mask_score_from_crop(render_point_zbuffer(pose, camera, surface), mask_prob);
}

/// Average log likelihood of the visible surface coordinates of the pose
/// hypothesis under the max-pooled correspondence table. Poses with an empty
/// rendered mask score the floor sentinel.
inline double corr_score(const Pose& pose, const Camera& camera, const SurfaceSampleSet& surface,
                         const CorrespondenceTable& pooled_table,
                         double min_score_floor = std::log(1e-12)) {
    return detail::corr_score_from_crop(render_point_zbuffer(pose, camera, surface), pooled_table,
                                        min_score_floor);
}

/// One render shared between both scores; the combined score normalizes each
/// by its maximum entropy: s = s_M / ln 2 + s_C / ln |S|.
inline PoseHypothesis score_hypothesis(const Pose& pose, const Camera& camera,
                                       const SurfaceSampleSet& surface, const VecX& mask_prob,
                                       const CorrespondenceTable& pooled_table,
                                       double min_score_floor = std::log(1e-12)) {
    const RenderedCrop crop = render_point_zbuffer(pose, camera, surface);
    PoseHypothesis h;
    h.pose = pose;
    h.mask_score = detail::mask_score_from_crop(crop, mask_prob);
    h.corr_score = detail::corr_score_from_crop(crop, pooled_table, min_score_floor);
    h.score = h.mask_score / std::log(2.0) +
              h.corr_score / std::log(static_cast<double>(pooled_table.surface_count));
    return h;
}

}  // namespace corrpose
