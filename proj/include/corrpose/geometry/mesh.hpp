#pragma once

#include <Eigen/Dense>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "corrpose/error.hpp"
#include "corrpose/geometry/pose.hpp"

namespace corrpose {

struct Triangle {
    Vec3 a, b, c;

    Vec3 normal() const {
        const Vec3 n = (b - a).cross(c - a);
        const double len = n.norm();
        return len > 0.0 ? Vec3(n / len) : Vec3(0, 0, 1);
    }

    double area() const { return 0.5 * (b - a).cross(c - a).norm(); }
};

struct TriangleMesh {
    std::vector<Triangle> triangles;

    double total_area() const {
        double sum = 0.0;
        for (const auto& t : triangles) sum += t.area();
        return sum;
    }

    void bounds(Vec3& lo, Vec3& hi) const {
        lo = Vec3::Constant(std::numeric_limits<double>::max());
        hi = Vec3::Constant(std::numeric_limits<double>::lowest());
        for (const auto& t : triangles) {
            for (const Vec3* v : {&t.a, &t.b, &t.c}) {
                lo = lo.cwiseMin(*v);
                hi = hi.cwiseMax(*v);
            }
        }
    }
};

/// ASCII OBJ subset: v / vn / f lines. Faces may be polygons (fanned) and may
/// use v, v//vn or v/vt/vn references; everything else is ignored.
inline TriangleMesh load_obj(std::istream& in) {
    std::vector<Vec3> vertices;
    TriangleMesh mesh;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "v") {
            double x, y, z;
            if (!(ls >> x >> y >> z)) raise(ErrorCode::IoError, "malformed vertex line: " + line);
            vertices.emplace_back(x, y, z);
        } else if (tag == "f") {
            std::vector<int> idx;
            std::string ref;
            while (ls >> ref) {
                const std::size_t slash = ref.find('/');
                const int vi = std::stoi(slash == std::string::npos ? ref : ref.substr(0, slash));
                const int resolved = vi > 0 ? vi - 1 : static_cast<int>(vertices.size()) + vi;
                if (resolved < 0 || resolved >= static_cast<int>(vertices.size())) {
                    raise(ErrorCode::IoError, "face references missing vertex: " + line);
                }
                idx.push_back(resolved);
            }
            if (idx.size() < 3) raise(ErrorCode::IoError, "face with fewer than 3 vertices: " + line);
            for (std::size_t k = 1; k + 1 < idx.size(); ++k) {
                mesh.triangles.push_back(
                    Triangle{vertices[idx[0]], vertices[idx[k]], vertices[idx[k + 1]]});
            }
        }
        // "vn" lines are accepted but unused: sampling takes normals from the
        // triangle planes, which keeps them consistent with the geometry.
    }
    return mesh;
}

inline TriangleMesh load_obj_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(ErrorCode::IoError, "cannot open mesh file " + path);
    return load_obj(in);
}

inline void save_obj_file(const TriangleMesh& mesh, const std::string& path) {
    std::ofstream out(path);
    if (!out) raise(ErrorCode::IoError, "cannot write mesh file " + path);
    out << "# triangle soup, " << mesh.triangles.size() << " faces\n";
    for (const auto& t : mesh.triangles) {
        for (const Vec3* v : {&t.a, &t.b, &t.c}) {
            out << "v " << v->x() << " " << v->y() << " " << v->z() << "\n";
        }
    }
    for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
        const std::size_t base = 3 * i;
        out << "f " << base + 1 << " " << base + 2 << " " << base + 3 << "\n";
    }
}

}  // namespace corrpose
