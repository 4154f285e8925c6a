#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "corrpose/error.hpp"
#include "corrpose/geometry/point_render.hpp"
#include "corrpose/synth/scene.hpp"

namespace corrpose {

// RCRP binary layout: magic "RCRP", u32 height/width/feature channels, then
// f32 planes in order: coord x3, normal x3, depth, features xF, visible mask,
// full mask (masks stored as 0/1 floats).

inline void save_crop(const RenderedCrop& crop, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) raise(ErrorCode::IoError, "cannot write " + path);
    const std::uint32_t h = static_cast<std::uint32_t>(crop.coord_image.height());
    const std::uint32_t w = static_cast<std::uint32_t>(crop.coord_image.width());
    const std::uint32_t f = static_cast<std::uint32_t>(crop.feature_image.channels());
    out.write("RCRP", 4);
    out.write(reinterpret_cast<const char*>(&h), 4);
    out.write(reinterpret_cast<const char*>(&w), 4);
    out.write(reinterpret_cast<const char*>(&f), 4);
    const auto write_plane = [&](auto getter) {
        std::vector<float> plane(static_cast<std::size_t>(h) * w);
        for (std::uint32_t r = 0; r < h; ++r) {
            for (std::uint32_t c = 0; c < w; ++c) {
                plane[static_cast<std::size_t>(r) * w + c] = getter(static_cast<int>(r), static_cast<int>(c));
            }
        }
        out.write(reinterpret_cast<const char*>(plane.data()),
                  static_cast<std::streamsize>(plane.size() * sizeof(float)));
    };
    for (int ch = 0; ch < 3; ++ch) {
        write_plane([&](int r, int c) { return crop.coord_image.at(r, c, ch); });
    }
    for (int ch = 0; ch < 3; ++ch) {
        write_plane([&](int r, int c) { return crop.normal_image.at(r, c, ch); });
    }
    write_plane([&](int r, int c) { return crop.depth_image.at(r, c); });
    for (std::uint32_t ch = 0; ch < f; ++ch) {
        write_plane([&](int r, int c) { return crop.feature_image.at(r, c, static_cast<int>(ch)); });
    }
    write_plane([&](int r, int c) { return crop.visible_mask.at(r, c) ? 1.0f : 0.0f; });
    write_plane([&](int r, int c) { return crop.full_mask.at(r, c) ? 1.0f : 0.0f; });
    if (!out) raise(ErrorCode::IoError, "short write to " + path);
}

inline RenderedCrop load_crop(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorCode::IoError, "cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "RCRP", 4) != 0) raise(ErrorCode::IoError, "bad RCRP magic in " + path);
    std::uint32_t h = 0, w = 0, f = 0;
    in.read(reinterpret_cast<char*>(&h), 4);
    in.read(reinterpret_cast<char*>(&w), 4);
    in.read(reinterpret_cast<char*>(&f), 4);
    RenderedCrop crop;
    crop.coord_image = ImageF(static_cast<int>(h), static_cast<int>(w), 3);
    crop.normal_image = ImageF(static_cast<int>(h), static_cast<int>(w), 3);
    crop.depth_image = ImageF(static_cast<int>(h), static_cast<int>(w), 1);
    crop.feature_image = ImageF(static_cast<int>(h), static_cast<int>(w), static_cast<int>(f));
    crop.visible_mask = ImageB(static_cast<int>(h), static_cast<int>(w), 1);
    crop.full_mask = ImageB(static_cast<int>(h), static_cast<int>(w), 1);
    crop.index_image = ImageI(static_cast<int>(h), static_cast<int>(w), 1, -1);
    std::vector<float> plane(static_cast<std::size_t>(h) * w);
    const auto read_plane = [&](auto setter) {
        in.read(reinterpret_cast<char*>(plane.data()),
                static_cast<std::streamsize>(plane.size() * sizeof(float)));
        if (!in) raise(ErrorCode::IoError, "truncated RCRP file " + path);
        for (std::uint32_t r = 0; r < h; ++r) {
            for (std::uint32_t c = 0; c < w; ++c) {
                setter(static_cast<int>(r), static_cast<int>(c),
                       plane[static_cast<std::size_t>(r) * w + c]);
            }
        }
    };
    for (int ch = 0; ch < 3; ++ch) {
        read_plane([&](int r, int c, float v) { crop.coord_image.at(r, c, ch) = v; });
    }
    for (int ch = 0; ch < 3; ++ch) {
        read_plane([&](int r, int c, float v) { crop.normal_image.at(r, c, ch) = v; });
    }
    read_plane([&](int r, int c, float v) { crop.depth_image.at(r, c) = v; });
    for (std::uint32_t ch = 0; ch < f; ++ch) {
        read_plane([&](int r, int c, float v) { crop.feature_image.at(r, c, static_cast<int>(ch)) = v; });
    }
    read_plane([&](int r, int c, float v) { crop.visible_mask.at(r, c) = v > 0.5f ? 1 : 0; });
    read_plane([&](int r, int c, float v) { crop.full_mask.at(r, c) = v > 0.5f ? 1 : 0; });
    return crop;
}

struct SceneRecord {
    int scene_id = 0;
    std::string object_name;
    std::uint64_t seed = 0;
    Pose pose;
    Camera camera;
    double diameter = 0.0;
};

inline nlohmann::json scene_record_to_json(const SceneRecord& rec) {
    nlohmann::json j;
    j["scene_id"] = rec.scene_id;
    j["object"] = rec.object_name;
    j["seed"] = rec.seed;
    std::vector<double> r(9);
    for (int i = 0; i < 3; ++i) {
        for (int k = 0; k < 3; ++k) r[static_cast<std::size_t>(i * 3 + k)] = rec.pose.rotation(i, k);
    }
    j["pose"] = {{"R", r},
                 {"t", {rec.pose.translation.x(), rec.pose.translation.y(), rec.pose.translation.z()}}};
    j["camera"] = {{"fx", rec.camera.fx}, {"fy", rec.camera.fy}, {"cx", rec.camera.cx},
                   {"cy", rec.camera.cy}, {"width", rec.camera.width}, {"height", rec.camera.height}};
    j["diameter"] = rec.diameter;
    return j;
}

inline SceneRecord scene_record_from_json(const nlohmann::json& j) {
    SceneRecord rec;
    rec.scene_id = j.at("scene_id").get<int>();
    rec.object_name = j.at("object").get<std::string>();
    rec.seed = j.at("seed").get<std::uint64_t>();
    const auto& r = j.at("pose").at("R");
    for (int i = 0; i < 3; ++i) {
        for (int k = 0; k < 3; ++k) rec.pose.rotation(i, k) = r.at(static_cast<std::size_t>(i * 3 + k)).get<double>();
    }
    const auto& t = j.at("pose").at("t");
    rec.pose.translation = Vec3(t.at(0).get<double>(), t.at(1).get<double>(), t.at(2).get<double>());
    const auto& cam = j.at("camera");
    rec.camera = Camera(cam.at("fx").get<double>(), cam.at("fy").get<double>(),
                        cam.at("cx").get<double>(), cam.at("cy").get<double>(),
                        cam.at("width").get<int>(), cam.at("height").get<int>());
    rec.diameter = j.at("diameter").get<double>();
    return rec;
}

inline void save_scene_records(const std::vector<SceneRecord>& records, const std::string& path) {
    std::ofstream out(path);
    if (!out) raise(ErrorCode::IoError, "cannot write " + path);
    for (const auto& rec : records) {
        out << scene_record_to_json(rec).dump() << "\n";
    }
}

inline std::vector<SceneRecord> load_scene_records(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(ErrorCode::IoError, "cannot open " + path);
    std::vector<SceneRecord> records;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        records.push_back(scene_record_from_json(nlohmann::json::parse(line)));
    }
    return records;
}

/// FNV-1a over a file's bytes; the manifest hash used for determinism checks.
inline std::string hash_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorCode::IoError, "cannot hash missing file " + path);
    std::uint64_t hash = 1469598103934665603ULL;
    char buffer[8192];
    while (in.read(buffer, sizeof(buffer)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            hash ^= static_cast<unsigned char>(buffer[i]);
            hash *= 1099511628211ULL;
        }
    }
    char hex[19];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(hash));
    return hex;
}

inline void write_manifest(const std::map<std::string, std::string>& file_hashes,
                           const std::string& path) {
    nlohmann::json j;
    j["files"] = file_hashes;
    std::ofstream out(path);
    if (!out) raise(ErrorCode::IoError, "cannot write " + path);
    out << j.dump(2) << "\n";
}

}  // namespace corrpose
