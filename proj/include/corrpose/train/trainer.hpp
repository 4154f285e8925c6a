#pragma once

#include <Eigen/Dense>
#include <numeric>
#include <vector>

#include "corrpose/error.hpp"
#include "corrpose/nn/adam.hpp"
#include "corrpose/nn/siren.hpp"
#include "corrpose/train/batch.hpp"
#include "corrpose/train/losses.hpp"

namespace corrpose {

/// Maps object coordinates into [-1, 1]^3 for the key model. Derived
/// deterministically from the surface sample set so training and inference
/// agree without extra persistence.
struct CoordNormalizer {
    Vec3 center = Vec3::Zero();
    double scale = 1.0;

    static CoordNormalizer from_surface(const SurfaceSampleSet& surface) {
        CoordNormalizer n;
        if (surface.size() == 0) return n;
        const Vec3 lo = surface.points.colwise().minCoeff().transpose();
        const Vec3 hi = surface.points.colwise().maxCoeff().transpose();
        n.center = 0.5 * (lo + hi);
        n.scale = std::max(1e-12, 0.5 * (hi - lo).maxCoeff());
        return n;
    }

    MatX normalize(const MatX& coords) const {
        MatX out = coords;
        out.rowwise() -= center.transpose();
        out /= scale;
        return out;
    }
};

struct TraceRow {
    std::int64_t step = 0;
    double loss_embed = 0.0;
    double loss_mask = 0.0;
    double effective_lr = 0.0;
};

/// Joint training of the key and query models with L = L_E + L_M.
/// All sampling and the shuffle order come from one seeded stream, so a run
/// is a pure function of (crops, surface, config).
class Trainer {
public:
    SirenMlp key_model;
    SirenMlp query_model;
    AdamState adam_key;
    AdamState adam_query;
    CoordNormalizer normalizer;
    Rng rng;
    std::vector<TraceRow> trace;

    Trainer(const std::vector<RenderedCrop>& crops, const SurfaceSampleSet& surface,
            const TrainConfig& cfg)
        : rng(mix_seed(cfg.rng_seed, 0x747261696eULL)), crops_(&crops), surface_(&surface),
          cfg_(cfg) {
        cfg_.validate();
        if (crops.empty()) raise(ErrorCode::InvalidConfig, "need at least one crop");
        const int f = crops.front().feature_image.channels();
        if (f < 1) raise(ErrorCode::InvalidConfig, "crops carry no feature image");
        normalizer = CoordNormalizer::from_surface(surface);
        key_model = siren_init(3, cfg_.key_hidden, cfg_.embed_dim, cfg_.omega0,
                               mix_seed(cfg.rng_seed, 0x6b6579ULL));
        query_model = siren_init(f, cfg_.query_hidden, cfg_.embed_dim + 1, cfg_.omega0,
                                 mix_seed(cfg.rng_seed, 0x717565727ULL));
        adam_key = AdamState::create(static_cast<Eigen::Index>(key_model.parameter_count()),
                                     cfg_.lr_key, cfg_.warmup_steps);
        adam_query = AdamState::create(static_cast<Eigen::Index>(query_model.parameter_count()),
                                       cfg_.lr_query, cfg_.warmup_steps);
        order_.resize(crops.size());
        std::iota(order_.begin(), order_.end(), 0);
    }

    std::int64_t total_steps() const {
        const auto per_epoch = static_cast<std::int64_t>(
            (crops_->size() + cfg_.batch_size - 1) / static_cast<std::size_t>(cfg_.batch_size));
        return per_epoch * cfg_.epochs;
    }

    /// One optimization step; returns false once the schedule is exhausted.
    bool step() {
        if (epoch_ >= cfg_.epochs) return false;
        if (cursor_ == 0) shuffle_order();

        std::vector<const RenderedCrop*> batch_crops;
        while (batch_crops.size() < static_cast<std::size_t>(cfg_.batch_size) &&
               cursor_ < order_.size()) {
            batch_crops.push_back(&(*crops_)[order_[cursor_++]]);
        }
        if (cursor_ >= order_.size()) {
            cursor_ = 0;
            ++epoch_;
        }

        TrainingBatch batch = sample_batch(batch_crops, *surface_, cfg_, rng);
        apply_feature_noise(batch);

        const auto b = static_cast<Eigen::Index>(batch.size());
        const int e = cfg_.embed_dim;
        const int f = query_model.in_dim();
        const Eigen::Index pairs = cfg_.pairs_per_crop;
        const Eigen::Index negs = cfg_.negatives_per_crop;
        const Eigen::Index masks = cfg_.mask_pixels_per_crop;

        MatX pair_features(b * pairs, f), mask_features(b * masks, f);
        MatX positives(b * pairs, 3), negatives(b * negs, 3);
        for (Eigen::Index i = 0; i < b; ++i) {
            const auto& cb = batch[static_cast<std::size_t>(i)];
            pair_features.middleRows(i * pairs, pairs) = cb.features;
            mask_features.middleRows(i * masks, masks) = cb.mask_features;
            positives.middleRows(i * pairs, pairs) = normalizer.normalize(cb.positive_coords);
            negatives.middleRows(i * negs, negs) = normalizer.normalize(cb.negative_coords);
        }

        GradientTape tape_pairs, tape_masks, tape_pos, tape_neg;
        const MatX query_out = siren_forward(query_model, pair_features, &tape_pairs);
        const MatX mask_out = siren_forward(query_model, mask_features, &tape_masks);
        const MatX key_pos = siren_forward(key_model, positives, &tape_pos);
        const MatX key_neg = siren_forward(key_model, negatives, &tape_neg);

        MatX query_cot = MatX::Zero(b * pairs, e + 1);
        MatX mask_cot = MatX::Zero(b * masks, e + 1);
        MatX pos_cot = MatX::Zero(b * pairs, e);
        MatX neg_cot = MatX::Zero(b * negs, e);

        const double inv_b = 1.0 / static_cast<double>(b);
        double loss_embed = 0.0;
        double loss_mask = 0.0;
        for (Eigen::Index i = 0; i < b; ++i) {
            const MatX q = query_out.block(i * pairs, 0, pairs, e);
            const MatX kp = key_pos.middleRows(i * pairs, pairs);
            const MatX kn = key_neg.middleRows(i * negs, negs);
            const auto nce = infonce_loss(q, kp, kn);
            loss_embed += nce.loss * inv_b;
            query_cot.block(i * pairs, 0, pairs, e) = nce.grad_queries * inv_b;
            pos_cot.middleRows(i * pairs, pairs) = nce.grad_positive_keys * inv_b;
            neg_cot.middleRows(i * negs, negs) = nce.grad_negative_keys * inv_b;

            const VecX logits = mask_out.block(i * masks, e, masks, 1);
            const auto bce = mask_bce_loss(logits, batch[static_cast<std::size_t>(i)].mask_labels);
            loss_mask += bce.loss * inv_b;
            mask_cot.block(i * masks, e, masks, 1) = bce.grad_logits * inv_b;
        }

        const std::int64_t this_step = adam_query.step + 1;
        if (!std::isfinite(loss_embed) || !std::isfinite(loss_mask)) {
            raise(ErrorCode::Diverged, "non-finite loss at step " + std::to_string(this_step));
        }

        auto q_grads = siren_backward(query_model, tape_pairs, query_cot);
        auto q_grads_mask = siren_backward(query_model, tape_masks, mask_cot);
        VecX q_flat = pack_gradients(q_grads) + pack_gradients(q_grads_mask);
        auto k_grads = siren_backward(key_model, tape_pos, pos_cot);
        auto k_grads_neg = siren_backward(key_model, tape_neg, neg_cot);
        VecX k_flat = pack_gradients(k_grads) + pack_gradients(k_grads_neg);

        VecX q_params = pack_parameters(query_model);
        adam_step(adam_query, q_params, q_flat);
        unpack_parameters(q_params, query_model);
        VecX k_params = pack_parameters(key_model);
        adam_step(adam_key, k_params, k_flat);
        unpack_parameters(k_params, key_model);

        trace.push_back({this_step, loss_embed, loss_mask, adam_query.effective_lr(this_step)});
        return true;
    }

    void run() {
        while (step()) {
        }
    }

private:
    void shuffle_order() {
        for (std::size_t i = order_.size(); i > 1; --i) {
            const std::size_t j = rng.uniform_index(i);
            std::swap(order_[i - 1], order_[j]);
        }
    }

    void apply_feature_noise(TrainingBatch& batch) {
        if (cfg_.feature_noise_sigma <= 0.0 || cfg_.feature_noise_prob <= 0.0) return;
        for (auto& cb : batch) {
            if (rng.uniform() >= cfg_.feature_noise_prob) continue;
            for (MatX* m : {&cb.features, &cb.mask_features}) {
                for (Eigen::Index r = 0; r < m->rows(); ++r) {
                    for (Eigen::Index c = 0; c < m->cols(); ++c) {
                        (*m)(r, c) += rng.normal(0.0, cfg_.feature_noise_sigma);
                    }
                }
            }
        }
    }

    const std::vector<RenderedCrop>* crops_;
    const SurfaceSampleSet* surface_;
    TrainConfig cfg_;
    std::vector<std::size_t> order_;
    std::size_t cursor_ = 0;
    int epoch_ = 0;
};

struct TrainedModels {
    SirenMlp key_model;
    SirenMlp query_model;
    CoordNormalizer normalizer;
    std::vector<TraceRow> trace;
};

inline TrainedModels train(const std::vector<RenderedCrop>& crops,
                           const SurfaceSampleSet& surface, const TrainConfig& cfg) {
    Trainer trainer(crops, surface, cfg);
    trainer.run();
    return {std::move(trainer.key_model), std::move(trainer.query_model), trainer.normalizer,
            std::move(trainer.trace)};
}

}  // namespace corrpose
