#pragma once

#include <cmath>
#include <map>
#include <vector>

#include "corrpose/geometry/mesh.hpp"
#include "corrpose/random.hpp"

namespace corrpose {

/// Axis-aligned box centered at the origin.
inline TriangleMesh box_mesh(double size_x, double size_y, double size_z) {
    const double hx = size_x / 2.0, hy = size_y / 2.0, hz = size_z / 2.0;
    TriangleMesh mesh;
    const auto quad = [&mesh](Vec3 a, Vec3 b, Vec3 c, Vec3 d) {
        mesh.triangles.push_back({a, b, c});
        mesh.triangles.push_back({a, c, d});
    };
    quad({-hx, -hy, -hz}, {-hx, hy, -hz}, {hx, hy, -hz}, {hx, -hy, -hz});
    quad({-hx, -hy, hz}, {hx, -hy, hz}, {hx, hy, hz}, {-hx, hy, hz});
    quad({-hx, -hy, -hz}, {hx, -hy, -hz}, {hx, -hy, hz}, {-hx, -hy, hz});
    quad({-hx, hy, -hz}, {-hx, hy, hz}, {hx, hy, hz}, {hx, hy, -hz});
    quad({-hx, -hy, -hz}, {-hx, -hy, hz}, {-hx, hy, hz}, {-hx, hy, -hz});
    quad({hx, -hy, -hz}, {hx, hy, -hz}, {hx, hy, hz}, {hx, -hy, hz});
    return mesh;
}

/// Closed cylinder along z, centered at the origin.
inline TriangleMesh cylinder_mesh(double radius, double height, int segments = 96) {
    TriangleMesh mesh;
    const double z0 = -height / 2.0;
    const double z1 = height / 2.0;
    for (int i = 0; i < segments; ++i) {
        const double a0 = 2.0 * M_PI * i / segments;
        const double a1 = 2.0 * M_PI * (i + 1) / segments;
        const Vec3 p00(radius * std::cos(a0), radius * std::sin(a0), z0);
        const Vec3 p10(radius * std::cos(a1), radius * std::sin(a1), z0);
        const Vec3 p01(radius * std::cos(a0), radius * std::sin(a0), z1);
        const Vec3 p11(radius * std::cos(a1), radius * std::sin(a1), z1);
        mesh.triangles.push_back({p00, p10, p11});
        mesh.triangles.push_back({p00, p11, p01});
        mesh.triangles.push_back({Vec3(0, 0, z0), p10, p00});
        mesh.triangles.push_back({Vec3(0, 0, z1), p01, p11});
    }
    return mesh;
}

namespace detail {

struct IcoBuilder {
    std::vector<Vec3> verts;
    std::vector<std::array<int, 3>> faces;
    std::map<std::pair<int, int>, int> midpoint_cache;

    int midpoint(int a, int b) {
        const auto key = std::minmax(a, b);
        const auto it = midpoint_cache.find(key);
        if (it != midpoint_cache.end()) return it->second;
        const Vec3 m = (verts[static_cast<std::size_t>(a)] + verts[static_cast<std::size_t>(b)]).normalized();
        verts.push_back(m);
        const int idx = static_cast<int>(verts.size()) - 1;
        midpoint_cache.emplace(key, idx);
        return idx;
    }
};

}  // namespace detail

/// Unit icosphere subdivided `subdivисions` times, then radially displaced by
/// `radial(direction)` (return 1.0 for a unit sphere).
template <typename RadialFn>
inline TriangleMesh icosphere_mesh(int subdivisions, RadialFn radial) {
    detail::IcoBuilder b;
    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    const std::vector<Vec3> base = {
        {-1, phi, 0}, {1, phi, 0}, {-1, -phi, 0}, {1, -phi, 0},
        {0, -1, phi}, {0, 1, phi}, {0, -1, -phi}, {0, 1, -phi},
        {phi, 0, -1}, {phi, 0, 1}, {-phi, 0, -1}, {-phi, 0, 1}};
    for (const auto& v : base) b.verts.push_back(v.normalized());
    b.faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
               {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
               {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
               {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
    for (int s = 0; s < subdivisions; ++s) {
        std::vector<std::array<int, 3>> next;
        next.reserve(b.faces.size() * 4);
        for (const auto& f : b.faces) {
            const int ab = b.midpoint(f[0], f[1]);
            const int bc = b.midpoint(f[1], f[2]);
            const int ca = b.midpoint(f[2], f[0]);
            next.push_back({f[0], ab, ca});
            next.push_back({f[1], bc, ab});
            next.push_back({f[2], ca, bc});
            next.push_back({ab, bc, ca});
        }
        b.faces = std::move(next);
    }
    TriangleMesh mesh;
    mesh.triangles.reserve(b.faces.size());
    std::vector<Vec3> displaced(b.verts.size());
    for (std::size_t i = 0; i < b.verts.size(); ++i) {
        displaced[i] = b.verts[i] * radial(b.verts[i]);
    }
    for (const auto& f : b.faces) {
        mesh.triangles.push_back({displaced[static_cast<std::size_t>(f[0])],
                                  displaced[static_cast<std::size_t>(f[1])],
                                  displaced[static_cast<std::size_t>(f[2])]});
    }
    return mesh;
}

inline TriangleMesh sphere_mesh(double radius, int subdivisions = 3) {
    return icosphere_mesh(subdivisions, [radius](const Vec3&) { return radius; });
}

/// Smooth star-shaped radial field used for the asymmetric blob: a sum of
/// low-frequency direction harmonics with seeded coefficients.
struct BlobRadial {
    double base_radius = 50.0;
    double amplitude = 0.16;
    std::vector<Vec3> axes;
    std::vector<double> freqs;
    std::vector<double> phases;

    BlobRadial() = default;
    BlobRadial(double radius, std::uint64_t seed, int modes = 5, double amp = 0.16)
        : base_radius(radius), amplitude(amp) {
        Rng rng(mix_seed(seed, 0x626c6f62ULL));
        for (int m = 0; m < modes; ++m) {
            axes.push_back(Vec3(rng.normal(), rng.normal(), rng.normal()).normalized());
            freqs.push_back(rng.uniform(1.0, 3.0));
            phases.push_back(rng.uniform(0.0, 2.0 * M_PI));
        }
    }

    double operator()(const Vec3& dir) const {
        double bump = 0.0;
        for (std::size_t m = 0; m < axes.size(); ++m) {
            bump += std::sin(freqs[m] * M_PI * dir.dot(axes[m]) + phases[m]);
        }
        const double scale = axes.empty() ? 0.0 : amplitude / static_cast<double>(axes.size());
        return base_radius * (1.0 + scale * bump);
    }
};

inline TriangleMesh blob_mesh(double radius, std::uint64_t seed, int subdivisions = 3) {
    return icosphere_mesh(subdivisions, BlobRadial(radius, seed));
}

}  // namespace corrpose
