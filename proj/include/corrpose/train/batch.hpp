#pragma once

#include <Eigen/Dense>
#include <vector>

#include "corrpose/error.hpp"
#include "corrpose/geometry/point_render.hpp"
#include "corrpose/geometry/surface_sampling.hpp"
#include "corrpose/nn/siren.hpp"
#include "corrpose/random.hpp"

namespace corrpose {

/// Training hyperparameters. Desk-scale defaults; the reference-scale values
/// (1024 pairs/negatives, batch 16) are reachable through configuration.
struct TrainConfig {
    int embed_dim = 12;
    int pairs_per_crop = 256;
    int negatives_per_crop = 256;
    int mask_pixels_per_crop = 256;
    int batch_size = 8;
    double lr_query = 3e-4;
    double lr_key = 3e-5;
    std::int64_t warmup_steps = 2000;
    int epochs = 10;
    std::uint64_t rng_seed = 0;
    double feature_noise_sigma = 0.05;
    double feature_noise_prob = 0.5;
    double omega0 = 30.0;
    std::vector<int> key_hidden = {64, 64, 64};
    std::vector<int> query_hidden = {128, 128};

    void validate() const {
        if (embed_dim < 1 || pairs_per_crop < 1 || negatives_per_crop < 1 ||
            mask_pixels_per_crop < 1 || batch_size < 1 || epochs < 0) {
            raise(ErrorCode::InvalidConfig, "training counts must be >= 1");
        }
    }
};

/// Sampled supervision for one crop: query pixels with their ground-truth
/// surface coordinates, per-crop negatives, and mask supervision pixels.
struct CropBatch {
    std::vector<int> pixel_rows;   // |U~| pixels inside the full mask
    std::vector<int> pixel_cols;
    MatX features;                 // |U~| x F
    MatX positive_coords;          // |U~| x 3, object frame
    MatX negative_coords;          // K x 3, uniform over the surface set
    MatX mask_features;            // M x F, uniform over the whole crop
    std::vector<unsigned char> mask_labels;  // M, from the full mask
};

using TrainingBatch = std::vector<CropBatch>;

namespace detail {

inline MatX features_at(const RenderedCrop& crop, const std::vector<int>& rows,
                        const std::vector<int>& cols) {
    const int f = crop.feature_image.channels();
    MatX out(static_cast<Eigen::Index>(rows.size()), f);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (int ch = 0; ch < f; ++ch) {
            out(static_cast<Eigen::Index>(i), ch) = crop.feature_image.at(rows[i], cols[i], ch);
        }
    }
    return out;
}

}  // namespace detail

/// Sample supervision for one crop. Pair pixels are uniform over the full
/// mask (occluded pixels included); negatives are uniform over the surface
/// sample set, drawn independently of the pixels; mask pixels are uniform
/// over the whole crop.
inline CropBatch sample_crop_batch(const RenderedCrop& crop, const SurfaceSampleSet& surface,
                                   const TrainConfig& cfg, Rng& rng) {
    std::vector<int> mask_rows, mask_cols;
    for (int r = 0; r < crop.full_mask.height(); ++r) {
        for (int c = 0; c < crop.full_mask.width(); ++c) {
            if (crop.full_mask.at(r, c)) {
                mask_rows.push_back(r);
                mask_cols.push_back(c);
            }
        }
    }
    if (mask_rows.empty()) raise(ErrorCode::EmptyMask, "crop has an empty full mask");

    CropBatch out;
    out.pixel_rows.resize(static_cast<std::size_t>(cfg.pairs_per_crop));
    out.pixel_cols.resize(static_cast<std::size_t>(cfg.pairs_per_crop));
    out.positive_coords.resize(cfg.pairs_per_crop, 3);
    for (int i = 0; i < cfg.pairs_per_crop; ++i) {
        const std::size_t pick = rng.uniform_index(mask_rows.size());
        const int r = mask_rows[pick];
        const int c = mask_cols[pick];
        out.pixel_rows[static_cast<std::size_t>(i)] = r;
        out.pixel_cols[static_cast<std::size_t>(i)] = c;
        for (int ch = 0; ch < 3; ++ch) {
            out.positive_coords(i, ch) = crop.coord_image.at(r, c, ch);
        }
    }
    out.features = detail::features_at(crop, out.pixel_rows, out.pixel_cols);

    out.negative_coords.resize(cfg.negatives_per_crop, 3);
    for (int i = 0; i < cfg.negatives_per_crop; ++i) {
        const auto idx = static_cast<Eigen::Index>(rng.uniform_index(
            static_cast<std::uint64_t>(surface.size())));
        out.negative_coords.row(i) = surface.points.row(idx);
    }

    std::vector<int> sup_rows(static_cast<std::size_t>(cfg.mask_pixels_per_crop));
    std::vector<int> sup_cols(static_cast<std::size_t>(cfg.mask_pixels_per_crop));
    out.mask_labels.resize(static_cast<std::size_t>(cfg.mask_pixels_per_crop));
    for (int i = 0; i < cfg.mask_pixels_per_crop; ++i) {
        const int r = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(crop.full_mask.height())));
        const int c = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(crop.full_mask.width())));
        sup_rows[static_cast<std::size_t>(i)] = r;
        sup_cols[static_cast<std::size_t>(i)] = c;
        out.mask_labels[static_cast<std::size_t>(i)] = crop.full_mask.at(r, c);
    }
    out.mask_features = detail::features_at(crop, sup_rows, sup_cols);
    return out;
}

inline TrainingBatch sample_batch(const std::vector<const RenderedCrop*>& crops,
                                  const SurfaceSampleSet& surface, const TrainConfig& cfg,
                                  Rng& rng) {
    TrainingBatch batch;
    batch.reserve(crops.size());
    for (const RenderedCrop* crop : crops) {
        batch.push_back(sample_crop_batch(*crop, surface, cfg, rng));
    }
    return batch;
}

}  // namespace corrpose
