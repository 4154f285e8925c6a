#pragma once

#include <Eigen/Dense>

#include "corrpose/geometry/surface_sampling.hpp"
#include "corrpose/synth/objects.hpp"

namespace corrpose {

/// Maximum symmetry-aware surface distance between two poses:
///   min over symmetry transforms S of max over sample points x of
///   |P_a x - P_b S x|.
/// Continuous groups are discretized (10-degree steps); the full-sphere group
/// admits the exact closed form |t_a - t_b| (choosing S = R_b^T R_a zeroes
/// the rotational field, and the point symmetry x <-> -x shows no S does
/// better), so spheres bypass the enumeration.
inline double symmetry_aware_distance(const Pose& pose_a, const Pose& pose_b,
                                      const SurfaceSampleSet& surface,
                                      const SymmetryGroup& group, int stride = 1) {
    if (group.full_sphere) {
        return (pose_a.translation - pose_b.translation).norm();
    }
    double best = std::numeric_limits<double>::max();
    const Eigen::Index n = surface.size();
    for (const Mat3& s : group.rotations) {
        const Mat3 rel_a = pose_a.rotation;
        const Mat3 rel_b = pose_b.rotation * s;
        double worst = 0.0;
        for (Eigen::Index i = 0; i < n; i += stride) {
            const Vec3 x = surface.point(i);
            const Vec3 da = rel_a * x + pose_a.translation;
            const Vec3 db = rel_b * x + pose_b.translation;
            worst = std::max(worst, (da - db).squaredNorm());
            if (worst >= best) break;  // cannot beat the incumbent
        }
        best = std::min(best, worst);
    }
    return std::sqrt(best);
}

}  // namespace corrpose
