#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "corrpose/error.hpp"
#include "corrpose/geometry/surface_sampling.hpp"
#include "corrpose/synth/shapes.hpp"

namespace corrpose {

enum class ShapeKind { Cylinder, Cube, Sphere, Blob };

inline const char* shape_kind_name(ShapeKind k) {
    switch (k) {
        case ShapeKind::Cylinder: return "cylinder";
        case ShapeKind::Cube: return "cube";
        case ShapeKind::Sphere: return "sphere";
        case ShapeKind::Blob: return "blob";
    }
    return "unknown";
}

inline ShapeKind shape_kind_from_name(const std::string& name) {
    if (name == "cylinder") return ShapeKind::Cylinder;
    if (name == "cube") return ShapeKind::Cube;
    if (name == "sphere") return ShapeKind::Sphere;
    if (name == "blob") return ShapeKind::Blob;
    raise(ErrorCode::InvalidConfig, "unknown shape kind: " + name);
}

/// Symmetry group of a shape, stored as an explicit list of object-frame
/// rotations (continuous axes discretized at 10 degrees). The identity is
/// always element 0.
struct SymmetryGroup {
    std::vector<Mat3> rotations;
    bool full_sphere = false;  // sphere: every rotation is a symmetry

    static SymmetryGroup identity_only() {
        SymmetryGroup g;
        g.rotations.push_back(Mat3::Identity());
        return g;
    }

    /// n-fold rotations about z.
    static SymmetryGroup discrete_z(int n) {
        SymmetryGroup g;
        for (int k = 0; k < n; ++k) {
            g.rotations.push_back(so3_exp(Vec3(0, 0, 2.0 * M_PI * k / n)));
        }
        return g;
    }

    /// Continuous z-axis discretized at `steps`, optionally extended by the
    /// end-over-end flip (pi about x) that an untextured cylinder also has.
    static SymmetryGroup continuous_z(int steps, bool with_flip) {
        SymmetryGroup g;
        const Mat3 flip = so3_exp(Vec3(M_PI, 0, 0));
        for (int k = 0; k < steps; ++k) {
            g.rotations.push_back(so3_exp(Vec3(0, 0, 2.0 * M_PI * k / steps)));
        }
        if (with_flip) {
            for (int k = 0; k < steps; ++k) {
                g.rotations.push_back(flip * so3_exp(Vec3(0, 0, 2.0 * M_PI * k / steps)));
            }
        }
        return g;
    }

    static SymmetryGroup sphere() {
        SymmetryGroup g = identity_only();
        g.full_sphere = true;
        return g;
    }

    /// Orbit of a surface point under the group (36 azimuthal representatives
    /// for the full sphere).
    std::vector<Vec3> orbit(const Vec3& point) const {
        std::vector<Vec3> out;
        if (full_sphere) {
            const double radius = point.norm();
            for (int k = 0; k < 36; ++k) {
                const double a = 2.0 * M_PI * k / 36;
                out.emplace_back(radius * std::cos(a), radius * std::sin(a), 0.0);
            }
            return out;
        }
        out.reserve(rotations.size());
        for (const auto& r : rotations) out.push_back(r * point);
        return out;
    }
};

/// Procedural intensity on the surface, in [0, 1].
using TextureFn = std::function<double(const Vec3&)>;

struct ObjectSpec {
    ShapeKind kind = ShapeKind::Blob;
    double size = 50.0;          // radius (cylinder/sphere/blob) or half-edge (cube)
    double height = 100.0;       // cylinder only
    std::uint64_t shape_seed = 0;  // blob only

    static ObjectSpec preset(ShapeKind kind) {
        ObjectSpec spec;
        spec.kind = kind;
        return spec;
    }
};

struct SyntheticObject {
    ObjectSpec spec;
    TriangleMesh mesh;
    SurfaceSampleSet surface;
    SymmetryGroup symmetry;
    TextureFn texture;

    double diameter() const { return surface.diameter(); }
};

namespace detail {

inline TextureFn make_texture(const ObjectSpec& spec) {
    switch (spec.kind) {
        case ShapeKind::Cylinder:
        case ShapeKind::Sphere:
            // Uniform texture: the full geometric symmetry stays visual.
            return [](const Vec3&) { return 0.5; };
        case ShapeKind::Cube: {
            // Distinct top/bottom plates break the flips; the side pattern is
            // invariant under 90-degree turns so the 4-fold symmetry remains.
            const double h = spec.size;
            return [h](const Vec3& p) {
                if (std::abs(p.z() - h) < 1e-6) return 0.9;
                if (std::abs(p.z() + h) < 1e-6) return 0.1;
                const double theta = std::atan2(p.y(), p.x());
                return 0.5 + 0.3 * std::sin(4.0 * theta) * std::sin(M_PI * p.z() / h);
            };
        }
        case ShapeKind::Blob: {
            // Smooth aperiodic pattern; no symmetry survives.
            const double s = spec.size;
            return [s](const Vec3& p) {
                const double v = 0.5 + 0.25 * std::sin(3.1 * p.x() / s + 0.7) +
                                 0.25 * std::cos(2.3 * p.y() / s - 1.2 + 1.7 * p.z() / s);
                return std::min(1.0, std::max(0.0, v));
            };
        }
    }
    return [](const Vec3&) { return 0.5; };
}

}  // namespace detail

/// Build the mesh, an evenly sampled surface, the analytic symmetry group and
/// the procedural texture for one synthetic object.
inline SyntheticObject make_object(const ObjectSpec& spec, int sample_count,
                                   std::uint64_t sample_seed = 0) {
    SyntheticObject obj;
    obj.spec = spec;
    switch (spec.kind) {
        case ShapeKind::Cylinder:
            obj.mesh = cylinder_mesh(spec.size, spec.height);
            obj.symmetry = SymmetryGroup::continuous_z(36, /*with_flip=*/true);
            break;
        case ShapeKind::Cube:
            obj.mesh = box_mesh(2.0 * spec.size, 2.0 * spec.size, 2.0 * spec.size);
            obj.symmetry = SymmetryGroup::discrete_z(4);
            break;
        case ShapeKind::Sphere:
            obj.mesh = sphere_mesh(spec.size, 4);
            obj.symmetry = SymmetryGroup::sphere();
            break;
        case ShapeKind::Blob:
            obj.mesh = blob_mesh(spec.size, spec.shape_seed, 3);
            obj.symmetry = SymmetryGroup::identity_only();
            break;
    }
    obj.surface = sample_surface_even(obj.mesh, sample_count, mix_seed(sample_seed, 0x73616d70ULL));
    obj.texture = detail::make_texture(spec);
    return obj;
}

}  // namespace corrpose
