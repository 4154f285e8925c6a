#pragma once

#include <Eigen/Dense>
#include <chrono>
#include <optional>
#include <string>
#include <vector>

#include "corrpose/bench/oracle.hpp"
#include "corrpose/corr/query_image.hpp"
#include "corrpose/corr/table.hpp"
#include "corrpose/geometry/raycast.hpp"
#include "corrpose/parallel.hpp"
#include "corrpose/pose/depth.hpp"
#include "corrpose/pose/ransac.hpp"
#include "corrpose/pose/refine.hpp"
#include "corrpose/synth/dataset.hpp"
#include "corrpose/synth/mssd.hpp"
#include "corrpose/synth/objects.hpp"
#include "corrpose/train/trainer.hpp"

namespace corrpose {

struct EstimateConfig {
    int downscale = 3;
    RansacConfig ransac;
    bool refine_enabled = true;
    bool depth_enabled = false;
    bool oracle_mode = false;
    double oracle_sigma_mult = 0.5;
    std::size_t table_budget_bytes = 2ull << 30;
};

struct SceneEstimate {
    int scene_id = 0;
    bool success = false;
    std::string error;
    Pose pose;
    double score = 0.0;
    double mask_score = 0.0;
    double corr_score = 0.0;
    int refine_iterations = 0;
    double runtime_ms = 0.0;
    double mssd = std::numeric_limits<double>::infinity();
    double rotation_error = std::numeric_limits<double>::infinity();  // mod symmetry, radians
    double translation_error = std::numeric_limits<double>::infinity();
};

/// Trained models plus the shared coordinate normalizer, as loaded from disk.
struct ModelBundle {
    SirenMlp key_model;
    SirenMlp query_model;
};

namespace detail {

/// Rotation error modulo the symmetry group.
inline double rotation_error_mod_symmetry(const Pose& estimate, const Pose& truth,
                                          const SymmetryGroup& group) {
    if (group.full_sphere) return 0.0;
    double best = std::numeric_limits<double>::max();
    for (const Mat3& s : group.rotations) {
        best = std::min(best, so3_log((truth.rotation * s).transpose() * estimate.rotation).norm());
    }
    return best;
}

/// Observed depth resampled onto the query grid by block-center picks;
/// averaging would blur object and background depths across edges.
inline ImageF depth_on_query_grid(const ImageF& depth_full, int downscale, int qh, int qw) {
    ImageF out(qh, qw, 1, 0.0f);
    for (int r = 0; r < qh; ++r) {
        for (int c = 0; c < qw; ++c) {
            out.at(r, c) = depth_full.at(r * downscale + downscale / 2, c * downscale + downscale / 2);
        }
    }
    return out;
}

}  // namespace detail

/// Full single-scene pipeline: query image (model or oracle), table, RANSAC,
/// optional refinement, optional depth adjustment, then symmetry-aware
/// errors against the ground truth.
inline SceneEstimate estimate_scene(const SyntheticObject& object, const SceneRecord& record,
                                    const RenderedCrop& crop, const ModelBundle* models,
                                    const EstimateConfig& cfg) {
    SceneEstimate out;
    out.scene_id = record.scene_id;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        const Camera query_camera = record.camera.downscaled(cfg.downscale);

        QueryImage qi;
        MatX keys;
        if (cfg.oracle_mode) {
            const OracleEmbedding oracle = OracleEmbedding::build(
                object.surface, cfg.oracle_sigma_mult * object.surface.nominal_spacing);
            const RenderedCrop exact = render_mesh_raycast(record.pose, query_camera, object.mesh);
            const RenderedCrop splat = render_point_zbuffer(record.pose, query_camera, object.surface);
            qi = build_oracle_query_image(oracle, exact, splat);
            keys = oracle.keys;
        } else {
            const CoordNormalizer normalizer = CoordNormalizer::from_surface(object.surface);
            qi = build_query_image(models->query_model, crop.feature_image, cfg.downscale);
            keys = siren_forward(models->key_model, normalizer.normalize(object.surface.points));
        }

        const CorrespondenceTable table = build_table(qi, keys, cfg.table_budget_bytes);
        const RansacResult ransac_result =
            ransac(table, qi.mask_prob, query_camera, object.surface, cfg.ransac);
        Pose pose = ransac_result.best.pose;
        out.score = ransac_result.best.score;
        out.mask_score = ransac_result.best.mask_score;
        out.corr_score = ransac_result.best.corr_score;

        if (cfg.refine_enabled) {
            const auto visible =
                visible_coordinates(pose, query_camera, object.surface, /*direct_only=*/true);
            if (!visible.empty()) {
                MatX coords(static_cast<Eigen::Index>(visible.size()), 3);
                MatX vkeys(static_cast<Eigen::Index>(visible.size()), keys.cols());
                for (std::size_t i = 0; i < visible.size(); ++i) {
                    coords.row(static_cast<Eigen::Index>(i)) = visible[i].coord.transpose();
                    vkeys.row(static_cast<Eigen::Index>(i)) = keys.row(visible[i].sample_index);
                }
                const RefineResult refined =
                    refine(pose, qi, table.log_denominator, coords, vkeys, query_camera);
                pose = refined.pose;
                out.refine_iterations = refined.iterations;
            }
        }

        if (cfg.depth_enabled) {
            const ImageF depth_q = detail::depth_on_query_grid(crop.depth_image, cfg.downscale,
                                                               qi.height, qi.width);
            pose = depth_adjust(pose, qi, depth_q, query_camera, object.surface);
        }

        out.pose = pose;
        out.success = true;
        out.mssd = symmetry_aware_distance(pose, record.pose, object.surface, object.symmetry, 4);
        out.rotation_error = detail::rotation_error_mod_symmetry(pose, record.pose, object.symmetry);
        out.translation_error = (pose.translation - record.pose.translation).norm();
    } catch (const Error& e) {
        out.success = false;
        out.error = error_code_name(e.code());
    }
    out.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

struct EvalReport {
    std::vector<SceneEstimate> rows;
    std::vector<double> thresholds = {0.02, 0.05, 0.10};  // fractions of diameter
    double diameter = 0.0;

    double recall_at(double threshold_fraction) const {
        if (rows.empty()) return 0.0;
        std::size_t hits = 0;
        for (const auto& row : rows) {
            hits += row.success && row.mssd <= threshold_fraction * diameter;
        }
        return static_cast<double>(hits) / static_cast<double>(rows.size());
    }

    double mean_translation_error() const {
        double sum = 0.0;
        std::size_t n = 0;
        for (const auto& row : rows) {
            if (!row.success) continue;
            sum += row.translation_error;
            ++n;
        }
        return n > 0 ? sum / static_cast<double>(n) : std::numeric_limits<double>::infinity();
    }
};

/// Estimate every scene of a test set, scene-parallel with ordered rows.
/// Failed scenes become failed rows, never aborts.
inline EvalReport evaluate_scenes(const SyntheticObject& object,
                                  const std::vector<SceneRecord>& records,
                                  const std::vector<const RenderedCrop*>& crops,
                                  const ModelBundle* models, const EstimateConfig& cfg,
                                  int threads) {
    EvalReport report;
    report.diameter = object.diameter();
    report.rows.resize(records.size());
    parallel_for(records.size(), threads, [&](std::size_t i) {
        report.rows[i] = estimate_scene(object, records[i], *crops[i], models, cfg);
    });
    return report;
}

}  // namespace corrpose
