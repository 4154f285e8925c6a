#pragma once

#include <Eigen/Dense>
#include <limits>
#include <utility>
#include <vector>

#include "corrpose/corr/query_image.hpp"
#include "corrpose/geometry/point_render.hpp"
#include "corrpose/geometry/surface_sampling.hpp"

namespace corrpose {

/// Ground-truth embedding in which the query/key dot product is exactly a
/// Gaussian kernel in surface distance:
///   q(c_u) . k(c_i) = -|c_u - c_i|^2 / (2 sigma^2).
/// Five dimensions suffice: k = [c_i / s, |c_i|^2 / (2 s^2), 1] and
/// q = [c_u / s, -1, -|c_u|^2 / (2 s^2)] with s = sigma. The induced softmax
/// is a proper correspondence distribution peaked at the true coordinate,
/// whose normalizer depends only on local sample density.
struct OracleEmbedding {
    MatX keys;  // |S| x 5
    double sigma = 1.0;

    static OracleEmbedding build(const SurfaceSampleSet& surface, double sigma) {
        OracleEmbedding oracle;
        oracle.sigma = sigma;
        oracle.keys.resize(surface.size(), 5);
        for (Eigen::Index i = 0; i < surface.size(); ++i) {
            const Vec3 c = surface.point(i);
            oracle.keys.row(i) << c.x() / sigma, c.y() / sigma, c.z() / sigma,
                c.squaredNorm() / (2.0 * sigma * sigma), 1.0;
        }
        return oracle;
    }

    VecX query_for(const Vec3& coord) const {
        VecX q(5);
        q << coord.x() / sigma, coord.y() / sigma, coord.z() / sigma, -1.0,
            -coord.squaredNorm() / (2.0 * sigma * sigma);
        return q;
    }
};

/// Oracle query image on the query grid. Queries carry the exact ray-cast
/// coordinates inside the exact silhouette (occluded pixels included);
/// every other pixel copies the query of the nearest exact-mask pixel, so the
/// field degrades smoothly past the silhouette the way a trained query model
/// does instead of presenting a cliff that biases refinement inward.
/// Mask probabilities follow the point-splat render: hypothesis scoring
/// renders masks with the same splat convention, and a tighter oracle mask
/// would systematically reward shrunken poses.
inline QueryImage build_oracle_query_image(const OracleEmbedding& oracle,
                                           const RenderedCrop& exact_render,
                                           const RenderedCrop& splat_render) {
    const int h = exact_render.full_mask.height();
    const int w = exact_render.full_mask.width();
    QueryImage qi;
    qi.height = h;
    qi.width = w;
    qi.downscale_factor = 1;
    qi.queries = MatX::Zero(static_cast<Eigen::Index>(h) * w, 5);
    qi.mask_prob = VecX::Zero(static_cast<Eigen::Index>(h) * w);

    std::vector<std::pair<int, int>> mask_pixels;
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            qi.mask_prob[qi.pixel_index(r, c)] = splat_render.full_mask.at(r, c) ? 1.0 : 0.0;
            if (!exact_render.full_mask.at(r, c)) continue;
            mask_pixels.emplace_back(r, c);
            const Vec3 coord(exact_render.coord_image.at(r, c, 0),
                             exact_render.coord_image.at(r, c, 1),
                             exact_render.coord_image.at(r, c, 2));
            qi.queries.row(qi.pixel_index(r, c)) = oracle.query_for(coord).transpose();
        }
    }
    if (mask_pixels.empty()) return qi;
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            if (exact_render.full_mask.at(r, c)) continue;
            int best_r = mask_pixels.front().first, best_c = mask_pixels.front().second;
            int best_d2 = std::numeric_limits<int>::max();
            for (const auto& [mr, mc] : mask_pixels) {
                const int d2 = (mr - r) * (mr - r) + (mc - c) * (mc - c);
                if (d2 < best_d2) {
                    best_d2 = d2;
                    best_r = mr;
                    best_c = mc;
                }
            }
            qi.queries.row(qi.pixel_index(r, c)) = qi.queries.row(qi.pixel_index(best_r, best_c));
        }
    }
    return qi;
}

}  // namespace corrpose
