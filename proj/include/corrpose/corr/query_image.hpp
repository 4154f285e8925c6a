#pragma once

#include <Eigen/Dense>

#include "corrpose/error.hpp"
#include "corrpose/io/image.hpp"
#include "corrpose/nn/siren.hpp"

namespace corrpose {

/// Dense query embeddings plus the mask-probability channel, on the grid left
/// by block-averaging the input features by downscale_factor.
struct QueryImage {
    int height = 0;
    int width = 0;
    int downscale_factor = 1;
    MatX queries;    // (H*W) x E, row-major over pixels
    VecX mask_prob;  // H*W in [0, 1]

    int embed_dim() const { return static_cast<int>(queries.cols()); }
    Eigen::Index pixel_index(int r, int c) const {
        return static_cast<Eigen::Index>(r) * width + c;
    }
};

/// Run the per-pixel query model over a feature image. Features are averaged
/// over each downscale block before the forward pass; the trailing output
/// channel becomes the mask probability through a sigmoid.
inline QueryImage build_query_image(const SirenMlp& query_model, const ImageF& feature_image,
                                    int downscale_factor) {
    if (downscale_factor < 1) raise(ErrorCode::InvalidConfig, "downscale_factor must be >= 1");
    const int f = feature_image.channels();
    if (f != query_model.in_dim()) {
        raise(ErrorCode::ShapeMismatch, "feature channels do not match the query model");
    }
    QueryImage out;
    out.downscale_factor = downscale_factor;
    out.height = feature_image.height() / downscale_factor;
    out.width = feature_image.width() / downscale_factor;
    const Eigen::Index pixels = static_cast<Eigen::Index>(out.height) * out.width;

    MatX features(pixels, f);
    const double inv_block = 1.0 / static_cast<double>(downscale_factor * downscale_factor);
    for (int r = 0; r < out.height; ++r) {
        for (int c = 0; c < out.width; ++c) {
            VecX acc = VecX::Zero(f);
            for (int dr = 0; dr < downscale_factor; ++dr) {
                for (int dc = 0; dc < downscale_factor; ++dc) {
                    for (int ch = 0; ch < f; ++ch) {
                        acc[ch] += feature_image.at(r * downscale_factor + dr,
                                                    c * downscale_factor + dc, ch);
                    }
                }
            }
            features.row(out.pixel_index(r, c)) = acc.transpose() * inv_block;
        }
    }

    const MatX raw = siren_forward(query_model, features);
    const int e = query_model.out_dim() - 1;
    out.queries = raw.leftCols(e);
    out.mask_prob = (1.0 / (1.0 + (-raw.col(e).array()).exp())).matrix();
    return out;
}

}  // namespace corrpose
