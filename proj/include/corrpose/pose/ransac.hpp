#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <vector>

#include "corrpose/corr/sampling.hpp"
#include "corrpose/corr/table.hpp"
#include "corrpose/error.hpp"
#include "corrpose/pose/ap3p.hpp"
#include "corrpose/pose/scoring.hpp"

namespace corrpose {

struct RansacConfig {
    int iterations = 2000;
    double gamma = 1.5;
    int retain = 8;  // hypotheses kept beyond the best
    std::uint64_t rng_seed = 0;
    double min_score_floor = std::log(1e-12);

    void validate() const {
        if (iterations < 1) raise(ErrorCode::InvalidConfig, "iterations must be >= 1");
    }
};

struct RansacResult {
    PoseHypothesis best;
    std::vector<PoseHypothesis> top;  // sorted by score desc, iteration asc
    int solved_iterations = 0;        // iterations that produced scored poses
};

/// PnP-RANSAC over correspondence draws: per iteration three samples from the
/// sharpened joint, AP3P, normal-based visibility pruning, then combined
/// scoring against the mask and the max-pooled table. Each iteration draws
/// from its own derived stream, so results are independent of evaluation
/// order. Ties break toward the lower iteration index.
inline RansacResult ransac(const CorrespondenceTable& table, const VecX& mask_prob,
                           const Camera& camera, const SurfaceSampleSet& surface,
                           const RansacConfig& cfg) {
    cfg.validate();
    JointWeights joint;
    try {
        joint = joint_distribution(table, mask_prob, cfg.gamma);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::AllZeroMask) {
            raise(ErrorCode::NoValidHypothesis, std::string("cannot sample: ") + e.what());
        }
        throw;
    }
    const CorrespondenceTable pooled = maxpool3(table);

    RansacResult result;
    std::vector<PoseHypothesis> scored;
    for (int iter = 0; iter < cfg.iterations; ++iter) {
        Rng iter_rng = Rng::stream(cfg.rng_seed, static_cast<std::uint64_t>(iter));
        const auto draws = sample_correspondences(joint, iter_rng, 3);

        Eigen::Matrix<double, 3, 2> image_points;
        Eigen::Matrix3d object_points;
        std::array<Vec2, 3> pixels;
        std::array<Vec3, 3> normals;
        for (int i = 0; i < 3; ++i) {
            const auto& s = draws[static_cast<std::size_t>(i)];
            pixels[static_cast<std::size_t>(i)] = Vec2(s.col, s.row);
            image_points.row(i) << static_cast<double>(s.col), static_cast<double>(s.row);
            object_points.row(i) = surface.points.row(s.surface_index);
            normals[static_cast<std::size_t>(i)] = surface.normal(s.surface_index);
        }

        std::vector<Pose> candidates;
        try {
            candidates = ap3p(image_points, object_points, camera);
        } catch (const Error&) {
            continue;  // degenerate draw or no real solution
        }

        bool any_scored = false;
        for (const Pose& pose : candidates) {
            if (!visibility_check(pose, pixels, normals, camera)) continue;
            PoseHypothesis h =
                score_hypothesis(pose, camera, surface, mask_prob, pooled, cfg.min_score_floor);
            h.iteration = iter;
            h.triple = {draws[0], draws[1], draws[2]};
            scored.push_back(std::move(h));
            any_scored = true;
        }
        result.solved_iterations += static_cast<int>(any_scored);
    }

    if (scored.empty()) {
        raise(ErrorCode::NoValidHypothesis, "no iteration produced a visible scored pose");
    }
    std::stable_sort(scored.begin(), scored.end(), [](const PoseHypothesis& a, const PoseHypothesis& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.iteration < b.iteration;
    });
    result.best = scored.front();
    const std::size_t keep = std::min<std::size_t>(scored.size(), static_cast<std::size_t>(cfg.retain));
    result.top.assign(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep));
    return result;
}

}  // namespace corrpose
