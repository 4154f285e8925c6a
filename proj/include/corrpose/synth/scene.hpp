#pragma once

#include <Eigen/Dense>
#include <vector>

#include "corrpose/error.hpp"
#include "corrpose/geometry/point_render.hpp"
#include "corrpose/random.hpp"
#include "corrpose/synth/objects.hpp"

namespace corrpose {

inline constexpr int kFeatureChannels = 8;

struct Occluder {
    ShapeKind kind = ShapeKind::Sphere;
    double size = 15.0;
    Pose pose;                  // occluder frame -> camera frame
    double texture_value = 0.4; // flat intensity
    std::uint64_t seed = 0;
};

/// One synthetic observation: object pose, camera, occluders and the two
/// fixed camera-frame light directions.
struct Scene {
    Pose object_pose;
    Camera camera;
    std::vector<Occluder> occluders;
    Vec3 light_a = Vec3(0.3, 0.5, -0.8).normalized();
    Vec3 light_b = Vec3(-0.6, -0.2, -0.77).normalized();
    std::uint64_t seed = 0;
};

/// Uniform rotation over SO(3) from three uniforms (Shoemake quaternions).
inline Mat3 random_rotation(Rng& rng) {
    const double u1 = rng.uniform();
    const double u2 = rng.uniform();
    const double u3 = rng.uniform();
    const double a = std::sqrt(1.0 - u1), b = std::sqrt(u1);
    const Eigen::Quaterniond q(b * std::cos(2.0 * M_PI * u3), a * std::sin(2.0 * M_PI * u2),
                               a * std::cos(2.0 * M_PI * u2), b * std::sin(2.0 * M_PI * u3));
    return q.toRotationMatrix();
}

/// Draw a scene: rotation uniform over SO(3); translation so the object
/// center projects inside the central 50% of the crop and its diameter fills
/// 30-70% of it; zero to two occluders partially in front.
inline Scene sample_scene(const SyntheticObject& object, const Camera& camera, Rng& rng) {
    Scene scene;
    scene.camera = camera;
    scene.object_pose.rotation = random_rotation(rng);

    const double diameter = object.diameter();
    const double f = 0.5 * (camera.fx + camera.fy);
    const double fill = rng.uniform(0.3, 0.7);
    const double depth = f * diameter / (fill * std::min(camera.width, camera.height));
    const double px = camera.cx + rng.uniform(-0.25, 0.25) * camera.width;
    const double py = camera.cy + rng.uniform(-0.25, 0.25) * camera.height;
    scene.object_pose.translation = camera.backproject(Vec2(px, py), depth);

    const int occluder_count = static_cast<int>(rng.uniform_index(3));
    const double apparent_radius = 0.5 * f * diameter / depth;
    for (int k = 0; k < occluder_count; ++k) {
        Occluder occ;
        occ.kind = rng.uniform() < 0.5 ? ShapeKind::Sphere : ShapeKind::Cube;
        occ.size = rng.uniform(0.10, 0.22) * diameter;
        occ.texture_value = rng.uniform(0.2, 0.8);
        occ.seed = rng.bits();
        const double occ_depth = depth * rng.uniform(0.55, 0.8);
        const double ox = px + rng.uniform(-0.6, 0.6) * apparent_radius;
        const double oy = py + rng.uniform(-0.6, 0.6) * apparent_radius;
        occ.pose = Pose(random_rotation(rng), camera.backproject(Vec2(ox, oy), occ_depth));
        scene.occluders.push_back(occ);
    }
    return scene;
}

namespace detail {

inline SurfaceSampleSet occluder_surface(const Occluder& occ) {
    TriangleMesh mesh;
    switch (occ.kind) {
        case ShapeKind::Sphere: mesh = sphere_mesh(occ.size, 3); break;
        default: mesh = box_mesh(2.0 * occ.size, 2.0 * occ.size, 2.0 * occ.size); break;
    }
    return sample_surface_even(mesh, 1500, mix_seed(occ.seed, 0x6f6363ULL));
}

inline void write_surface_features(RenderedCrop& crop, int r, int c, const Vec3& normal_cam,
                                   double texture, const Scene& scene) {
    crop.feature_image.at(r, c, 0) = static_cast<float>(normal_cam.x());
    crop.feature_image.at(r, c, 1) = static_cast<float>(normal_cam.y());
    crop.feature_image.at(r, c, 2) = static_cast<float>(normal_cam.z());
    crop.feature_image.at(r, c, 3) = static_cast<float>(std::max(0.0, normal_cam.dot(scene.light_a)));
    crop.feature_image.at(r, c, 4) = static_cast<float>(std::max(0.0, normal_cam.dot(scene.light_b)));
    crop.feature_image.at(r, c, 5) = static_cast<float>(texture);
    const int w = crop.feature_image.width();
    const int h = crop.feature_image.height();
    crop.feature_image.at(r, c, 6) = static_cast<float>(2.0 * c / (w - 1) - 1.0);
    crop.feature_image.at(r, c, 7) = static_cast<float>(2.0 * r / (h - 1) - 1.0);
}

}  // namespace detail

/// Render the scene into a full RenderedCrop with feature image. The object's
/// own render defines the full mask, coordinates and normals (so occluded
/// pixels keep their true object coordinate); occluders overwrite visibility,
/// scene depth and the features seen at their pixels; background pixels get
/// zero-mean noise features.
inline RenderedCrop render_features(const Scene& scene, const SyntheticObject& object) {
    RenderedCrop crop = render_point_zbuffer(scene.object_pose, scene.camera, object.surface);
    const int h = scene.camera.height;
    const int w = scene.camera.width;
    crop.feature_image = ImageF(h, w, kFeatureChannels, 0.0f);

    // full_mask from the object-only render; visibility gets carved below.
    crop.full_mask = crop.visible_mask;

    struct OccluderLayer {
        RenderedCrop crop;
        double texture = 0.4;
    };
    std::vector<OccluderLayer> layers;
    for (const auto& occ : scene.occluders) {
        layers.push_back({render_point_zbuffer(occ.pose, scene.camera, detail::occluder_surface(occ)),
                          occ.texture_value});
    }

    Rng noise_rng(mix_seed(scene.seed, 0x62676e6fULL));
    std::size_t visible_count = 0;
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const bool object_here = crop.full_mask.at(r, c) != 0;
            double object_depth =
                object_here ? crop.depth_image.at(r, c) : std::numeric_limits<double>::infinity();

            int front_layer = -1;
            double front_depth = object_depth;
            for (std::size_t k = 0; k < layers.size(); ++k) {
                const auto& lc = layers[k].crop;
                if (lc.visible_mask.at(r, c) && lc.depth_image.at(r, c) < front_depth) {
                    front_depth = lc.depth_image.at(r, c);
                    front_layer = static_cast<int>(k);
                }
            }

            if (object_here && front_layer < 0) {
                // Object is the nearest surface.
                const Vec3 n(crop.normal_image.at(r, c, 0), crop.normal_image.at(r, c, 1),
                             crop.normal_image.at(r, c, 2));
                const Vec3 coord(crop.coord_image.at(r, c, 0), crop.coord_image.at(r, c, 1),
                                 crop.coord_image.at(r, c, 2));
                detail::write_surface_features(crop, r, c, n, object.texture(coord), scene);
                crop.visible_mask.at(r, c) = 1;
                ++visible_count;
            } else if (front_layer >= 0) {
                // An occluder wins the pixel (over the object or background).
                const auto& lc = layers[static_cast<std::size_t>(front_layer)].crop;
                const Vec3 n(lc.normal_image.at(r, c, 0), lc.normal_image.at(r, c, 1),
                             lc.normal_image.at(r, c, 2));
                detail::write_surface_features(crop, r, c, n,
                                               layers[static_cast<std::size_t>(front_layer)].texture,
                                               scene);
                crop.visible_mask.at(r, c) = 0;
                crop.depth_image.at(r, c) = static_cast<float>(front_depth);
            } else {
                // Background noise, zero mean.
                for (int ch = 0; ch < kFeatureChannels; ++ch) {
                    crop.feature_image.at(r, c, ch) = static_cast<float>(noise_rng.normal(0.0, 0.3));
                }
                crop.visible_mask.at(r, c) = 0;
                crop.depth_image.at(r, c) = 0.0f;
            }
        }
    }
    if (visible_count == 0) raise(ErrorCode::FullyOccluded, "object fully hidden by occluders");
    return crop;
}

struct GeneratedScene {
    Scene scene;
    RenderedCrop crop;
};

/// Deterministic scene generation with the >= 10% visibility invariant
/// enforced by rejection. Each (master_seed, index) pair maps to one scene.
inline GeneratedScene generate_scene(const SyntheticObject& object, const Camera& camera,
                                     std::uint64_t master_seed, std::uint64_t index) {
    Rng rng = Rng::stream(master_seed, index);
    for (int attempt = 0; attempt < 64; ++attempt) {
        Scene scene = sample_scene(object, camera, rng);
        scene.seed = mix_seed(master_seed, index * 1000ULL + static_cast<std::uint64_t>(attempt));
        RenderedCrop crop;
        try {
            crop = render_features(scene, object);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::FullyOccluded) continue;
            throw;
        }
        std::size_t full = 0, visible = 0;
        for (int r = 0; r < camera.height; ++r) {
            for (int c = 0; c < camera.width; ++c) {
                full += crop.full_mask.at(r, c) != 0;
                visible += crop.visible_mask.at(r, c) != 0;
            }
        }
        if (full == 0 || static_cast<double>(visible) / static_cast<double>(full) < 0.1) continue;
        return {std::move(scene), std::move(crop)};
    }
    raise(ErrorCode::InvalidConfig, "could not generate a >=10% visible scene in 64 attempts");
}

}  // namespace corrpose
