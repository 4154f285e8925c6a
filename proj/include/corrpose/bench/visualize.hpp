#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "corrpose/corr/query_image.hpp"
#include "corrpose/corr/table.hpp"
#include "corrpose/geometry/point_render.hpp"
#include "corrpose/io/image.hpp"

namespace corrpose {

namespace detail {

/// Split E dimensions into three near-equal contiguous groups and sum each.
inline Eigen::Vector3d dimension_set_sums(const VecX& embedding) {
    const Eigen::Index e = embedding.size();
    Eigen::Vector3d out = Eigen::Vector3d::Zero();
    const Eigen::Index base = e / 3;
    const Eigen::Index extra = e % 3;
    Eigen::Index at = 0;
    for (int g = 0; g < 3; ++g) {
        const Eigen::Index len = base + (g < extra ? 1 : 0);
        for (Eigen::Index i = 0; i < len && at < e; ++i) out[g] += embedding[at++];
    }
    return out;
}

inline unsigned char to_byte(double centered) {
    const double v = std::round(128.0 + centered);
    return static_cast<unsigned char>(std::min(255.0, std::max(0.0, v)));
}

}  // namespace detail

/// RGB rendering of per-pixel embeddings by dimension-set summation, scaled
/// so the extreme value reaches the range edge and zero maps to mid-gray.
inline Image<unsigned char> visualize_embedding_image(const MatX& embeddings, int height,
                                                      int width) {
    MatX sums(embeddings.rows(), 3);
    for (Eigen::Index p = 0; p < embeddings.rows(); ++p) {
        sums.row(p) = detail::dimension_set_sums(embeddings.row(p).transpose()).transpose();
    }
    const double peak = sums.cwiseAbs().maxCoeff();
    const double scale = peak > 0.0 ? 127.0 / peak : 0.0;
    Image<unsigned char> rgb(height, width, 3, 128);
    for (Eigen::Index p = 0; p < sums.rows(); ++p) {
        const int r = static_cast<int>(p / width);
        const int c = static_cast<int>(p % width);
        for (int ch = 0; ch < 3; ++ch) {
            rgb.at(r, c, ch) = detail::to_byte(sums(p, ch) * scale);
        }
    }
    return rgb;
}

/// Key visualization: keys demeaned over the surface, then the object is
/// point-rendered under `pose` and each visible pixel shows its sample's key.
inline Image<unsigned char> visualize_keys(const MatX& keys, const Pose& pose,
                                           const Camera& camera, const SurfaceSampleSet& surface) {
    const MatX demeaned = keys.rowwise() - keys.colwise().mean();
    const RenderedCrop crop = render_point_zbuffer(pose, camera, surface);
    MatX sums(static_cast<Eigen::Index>(camera.height) * camera.width, 3);
    sums.setZero();
    for (int r = 0; r < camera.height; ++r) {
        for (int c = 0; c < camera.width; ++c) {
            if (!crop.visible_mask.at(r, c)) continue;
            sums.row(static_cast<Eigen::Index>(r) * camera.width + c) =
                detail::dimension_set_sums(demeaned.row(crop.index_image.at(r, c)).transpose())
                    .transpose();
        }
    }
    const double peak = sums.cwiseAbs().maxCoeff();
    const double scale = peak > 0.0 ? 127.0 / peak : 0.0;
    Image<unsigned char> rgb(camera.height, camera.width, 3, 128);
    for (Eigen::Index p = 0; p < sums.rows(); ++p) {
        const int r = static_cast<int>(p / camera.width);
        const int c = static_cast<int>(p % camera.width);
        for (int ch = 0; ch < 3; ++ch) rgb.at(r, c, ch) = detail::to_byte(sums(p, ch) * scale);
    }
    return rgb;
}

/// Per-pixel entropy of the correspondence table, mapped onto [0, 255] with
/// the maximum entropy ln |S| at white.
inline Image<unsigned char> visualize_entropy(const CorrespondenceTable& table) {
    const double max_entropy = std::log(static_cast<double>(table.surface_count));
    Image<unsigned char> gray(table.height, table.width, 1, 0);
    for (int r = 0; r < table.height; ++r) {
        for (int c = 0; c < table.width; ++c) {
            const float* p = table.slice(table.pixel_index(r, c));
            double h = 0.0;
            for (Eigen::Index i = 0; i < table.surface_count; ++i) {
                const double v = static_cast<double>(p[i]);
                if (v > 0.0) h -= v * std::log(v);
            }
            const double scaled = max_entropy > 0.0 ? h / max_entropy : 0.0;
            gray.at(r, c) = static_cast<unsigned char>(
                std::min(255.0, std::max(0.0, std::round(scaled * 255.0))));
        }
    }
    return gray;
}

}  // namespace corrpose
