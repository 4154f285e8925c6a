#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "corrpose/corr/query_image.hpp"
#include "corrpose/error.hpp"
#include "corrpose/nn/siren.hpp"

namespace corrpose {

struct KeyDistribution {
    VecX probs;
    double log_denominator = 0.0;  // log sum_j exp(q . k_j)
};

/// Softmax over dot products between one query and all keys.
inline KeyDistribution key_distribution(const VecX& query, const MatX& keys) {
    if (keys.rows() < 1) raise(ErrorCode::ShapeMismatch, "need at least one key");
    if (keys.cols() != query.size()) raise(ErrorCode::ShapeMismatch, "embedding dims disagree");
    const VecX logits = keys * query;
    const double m = logits.maxCoeff();
    VecX e = (logits.array() - m).exp();
    const double total = e.sum();
    KeyDistribution out;
    out.probs = e / total;
    out.log_denominator = m + std::log(total);
    return out;
}

/// Dense per-pixel surface distribution: probs[pixel][i] = Pr(c_i | q_pixel).
/// Probabilities are float32; the log-denominator is kept in double for
/// refinement. Slices sum to 1 within float tolerance by construction.
struct CorrespondenceTable {
    int height = 0;
    int width = 0;
    Eigen::Index surface_count = 0;
    std::vector<float> probs;        // (H*W) * |S|, pixel-major
    VecX log_denominator;            // H*W
    MatX keys;                       // |S| x E

    Eigen::Index pixel_index(int r, int c) const {
        return static_cast<Eigen::Index>(r) * width + c;
    }
    const float* slice(Eigen::Index pixel) const {
        return probs.data() + static_cast<std::size_t>(pixel) * static_cast<std::size_t>(surface_count);
    }
    float* slice(Eigen::Index pixel) {
        return probs.data() + static_cast<std::size_t>(pixel) * static_cast<std::size_t>(surface_count);
    }
    float at(int r, int c, Eigen::Index i) const { return slice(pixel_index(r, c))[i]; }
};

/// Evaluate key_distribution for every pixel of a query image.
/// memory_budget_bytes guards the H*W*|S| allocation.
inline CorrespondenceTable build_table(const QueryImage& query_image, const MatX& keys,
                                       std::size_t memory_budget_bytes = 2ull << 30) {
    const Eigen::Index pixels = query_image.queries.rows();
    const Eigen::Index s = keys.rows();
    const std::size_t bytes = static_cast<std::size_t>(pixels) * static_cast<std::size_t>(s) * sizeof(float);
    if (bytes > memory_budget_bytes) {
        raise(ErrorCode::TableTooLarge,
              std::to_string(bytes) + " bytes exceeds budget " + std::to_string(memory_budget_bytes));
    }
    CorrespondenceTable table;
    table.height = query_image.height;
    table.width = query_image.width;
    table.surface_count = s;
    table.keys = keys;
    table.probs.resize(static_cast<std::size_t>(pixels) * static_cast<std::size_t>(s));
    table.log_denominator.resize(pixels);

    // One logits gemm per row block keeps memory bounded and Eigen fast.
    const Eigen::Index block = std::max<Eigen::Index>(1, 4096 * 64 / std::max<Eigen::Index>(1, s));
    for (Eigen::Index start = 0; start < pixels; start += block) {
        const Eigen::Index count = std::min(block, pixels - start);
        MatX logits = query_image.queries.middleRows(start, count) * keys.transpose();
        for (Eigen::Index p = 0; p < count; ++p) {
            const double m = logits.row(p).maxCoeff();
            Eigen::ArrayXd e = (logits.row(p).transpose().array() - m).exp();
            const double total = e.sum();
            table.log_denominator[start + p] = m + std::log(total);
            float* dst = table.slice(start + p);
            const double inv = 1.0 / total;
            for (Eigen::Index i = 0; i < s; ++i) {
                dst[i] = static_cast<float>(e[i] * inv);
            }
        }
    }
    return table;
}

/// 3x3 spatial max-pool with stride 1 per surface index; window shrinks at
/// the borders. Pooled slices are no longer normalized.
inline CorrespondenceTable maxpool3(const CorrespondenceTable& table) {
    CorrespondenceTable out;
    out.height = table.height;
    out.width = table.width;
    out.surface_count = table.surface_count;
    out.keys = table.keys;
    out.log_denominator = table.log_denominator;
    out.probs.resize(table.probs.size());

    const Eigen::Index s = table.surface_count;
    // Horizontal pass into a scratch buffer, then vertical pass; max over a
    // square window is separable.
    std::vector<float> scratch(table.probs.size());
    for (int r = 0; r < table.height; ++r) {
        for (int c = 0; c < table.width; ++c) {
            const int c0 = std::max(0, c - 1);
            const int c1 = std::min(table.width - 1, c + 1);
            float* dst = scratch.data() +
                         static_cast<std::size_t>(table.pixel_index(r, c)) * static_cast<std::size_t>(s);
            const float* mid = table.slice(table.pixel_index(r, c0));
            for (Eigen::Index i = 0; i < s; ++i) dst[i] = mid[i];
            for (int cc = c0 + 1; cc <= c1; ++cc) {
                const float* src = table.slice(table.pixel_index(r, cc));
                for (Eigen::Index i = 0; i < s; ++i) dst[i] = std::max(dst[i], src[i]);
            }
        }
    }
    for (int r = 0; r < table.height; ++r) {
        for (int c = 0; c < table.width; ++c) {
            const int r0 = std::max(0, r - 1);
            const int r1 = std::min(table.height - 1, r + 1);
            float* dst = out.slice(out.pixel_index(r, c));
            const float* mid = scratch.data() +
                               static_cast<std::size_t>(table.pixel_index(r0, c)) * static_cast<std::size_t>(s);
            for (Eigen::Index i = 0; i < s; ++i) dst[i] = mid[i];
            for (int rr = r0 + 1; rr <= r1; ++rr) {
                const float* src = scratch.data() +
                                   static_cast<std::size_t>(table.pixel_index(rr, c)) * static_cast<std::size_t>(s);
                for (Eigen::Index i = 0; i < s; ++i) dst[i] = std::max(dst[i], src[i]);
            }
        }
    }
    return out;
}

}  // namespace corrpose
