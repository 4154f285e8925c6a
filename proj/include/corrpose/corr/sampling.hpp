#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "corrpose/corr/table.hpp"
#include "corrpose/error.hpp"
#include "corrpose/random.hpp"

namespace corrpose {

struct CorrespondenceSample {
    int row = 0;
    int col = 0;
    Eigen::Index surface_index = 0;
};

/// Categorical draws by CDF binary search. Weights must be normalized.
inline std::vector<std::size_t> inversion_sample(const VecX& weights, Rng& rng, int count) {
    std::vector<double> cdf(static_cast<std::size_t>(weights.size()));
    double acc = 0.0;
    for (Eigen::Index i = 0; i < weights.size(); ++i) {
        acc += weights[i];
        cdf[static_cast<std::size_t>(i)] = acc;
    }
    std::vector<std::size_t> out(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) {
        const double u = rng.uniform() * acc;
        const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        out[static_cast<std::size_t>(k)] =
            std::min(static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1);
    }
    return out;
}

/// Gamma-sharpened joint weights over (pixel, surface index), stored in the
/// factorized form weight(u, i) = M_u * p_i(u)^gamma / S_u-normalizers. The
/// joint over a 74x74 x 4096 table never needs materializing: the pixel
/// marginal and per-pixel conditionals sample identically to the flat joint.
struct JointWeights {
    int height = 0;
    int width = 0;
    double gamma = 1.0;
    const CorrespondenceTable* table = nullptr;
    VecX pixel_marginal;   // normalized marginal over pixels
    VecX conditional_sum;  // per pixel: sum_i p_i(u)^gamma
    double total = 0.0;    // sum_u mask_u^gamma * conditional_sum[u]
    VecX mask_weight;      // mask_prob(u) / sum mask_prob, pre-sharpening

    double weight(Eigen::Index pixel, Eigen::Index i) const {
        const double p = static_cast<double>(table->slice(pixel)[i]);
        return std::pow(mask_weight[pixel] * p, gamma) / total;
    }

    /// Dense (H*W) x |S| materialization; intended for tests on small tables.
    MatX dense() const {
        const Eigen::Index pixels = pixel_marginal.size();
        MatX out(pixels, table->surface_count);
        for (Eigen::Index u = 0; u < pixels; ++u) {
            for (Eigen::Index i = 0; i < table->surface_count; ++i) {
                out(u, i) = weight(u, i);
            }
        }
        return out;
    }
};

/// Eq.-style joint: weight(u, i) proportional to (Pr(u|I) p_i(u))^gamma with
/// Pr(u|I) = mask_prob(u) / sum mask_prob. Sharpening applies to the joint
/// weights used for sampling only; scores read the unsharpened table.
inline JointWeights joint_distribution(const CorrespondenceTable& table, const VecX& mask_prob,
                                       double gamma) {
    if (gamma <= 0.0) raise(ErrorCode::InvalidConfig, "gamma must be positive");
    const Eigen::Index pixels = static_cast<Eigen::Index>(table.height) * table.width;
    if (mask_prob.size() != pixels) raise(ErrorCode::ShapeMismatch, "mask size mismatch");
    const double mask_total = mask_prob.sum();
    if (!(mask_total > 0.0)) raise(ErrorCode::AllZeroMask, "mask probabilities sum to zero");

    JointWeights joint;
    joint.height = table.height;
    joint.width = table.width;
    joint.gamma = gamma;
    joint.table = &table;
    joint.mask_weight = mask_prob / mask_total;
    joint.conditional_sum.resize(pixels);
    joint.pixel_marginal.resize(pixels);
    for (Eigen::Index u = 0; u < pixels; ++u) {
        const float* p = table.slice(u);
        double acc = 0.0;
        for (Eigen::Index i = 0; i < table.surface_count; ++i) {
            acc += std::pow(static_cast<double>(p[i]), gamma);
        }
        joint.conditional_sum[u] = acc;
        joint.pixel_marginal[u] = std::pow(joint.mask_weight[u], gamma) * acc;
    }
    joint.total = joint.pixel_marginal.sum();
    joint.pixel_marginal /= joint.total;
    return joint;
}

/// Draw (pixel, surface index) pairs from the sharpened joint: the pixel by
/// inversion over the marginal, the index by inversion over that pixel's
/// sharpened conditional.
inline std::vector<CorrespondenceSample> sample_correspondences(const JointWeights& joint,
                                                                Rng& rng, int count) {
    std::vector<CorrespondenceSample> out(static_cast<std::size_t>(count));
    const auto pixel_draws = inversion_sample(joint.pixel_marginal, rng, count);
    for (int k = 0; k < count; ++k) {
        const Eigen::Index u = static_cast<Eigen::Index>(pixel_draws[static_cast<std::size_t>(k)]);
        const float* p = joint.table->slice(u);
        const double target = rng.uniform() * joint.conditional_sum[u];
        double acc = 0.0;
        Eigen::Index pick = joint.table->surface_count - 1;
        for (Eigen::Index i = 0; i < joint.table->surface_count; ++i) {
            acc += std::pow(static_cast<double>(p[i]), joint.gamma);
            if (acc >= target) {
                pick = i;
                break;
            }
        }
        out[static_cast<std::size_t>(k)] = {static_cast<int>(u / joint.width),
                                            static_cast<int>(u % joint.width), pick};
    }
    return out;
}

}  // namespace corrpose
