#include <catch2/catch_amalgamated.hpp>

#include "corrpose/synth/scene.hpp"

using namespace corrpose;

namespace {

Camera test_camera() { return Camera(140.0, 140.0, 56.0, 56.0, 112, 112); }

}  // namespace

TEST_CASE("sampled rotations are uniform over SO(3)", "[scene]") {
    // The Haar-measure mean of rotation matrices is the zero matrix.
    Rng rng(42);
    Mat3 mean = Mat3::Zero();
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) mean += random_rotation(rng);
    mean /= static_cast<double>(draws);
    // Per-entry std of R_ij is ~1/sqrt(3); 3 sigma of the mean estimate.
    const double limit = 3.0 / std::sqrt(3.0 * draws);
    CHECK(mean.cwiseAbs().maxCoeff() < 3.5 * limit);
}

TEST_CASE("scenes satisfy the layout constraints", "[scene]") {
    const auto object = make_object(ObjectSpec::preset(ShapeKind::Blob), 2000, 1);
    const Camera cam = test_camera();
    Rng rng(7);
    for (int i = 0; i < 50; ++i) {
        const Scene scene = sample_scene(object, cam, rng);
        const Vec2 center = cam.project_cam(scene.object_pose.translation);
        CHECK(center.x() >= cam.cx - 0.25 * cam.width);
        CHECK(center.x() <= cam.cx + 0.25 * cam.width);
        CHECK(center.y() >= cam.cy - 0.25 * cam.height);
        CHECK(center.y() <= cam.cy + 0.25 * cam.height);
        const double fill = 140.0 * object.diameter() /
                            (scene.object_pose.translation.z() * 112.0);
        CHECK(fill >= 0.29);
        CHECK(fill <= 0.71);
        CHECK(scene.occluders.size() <= 2);
    }
}

TEST_CASE("generated scenes are at least 10 percent visible and deterministic", "[scene]") {
    const auto object = make_object(ObjectSpec::preset(ShapeKind::Blob), 2000, 1);
    const Camera cam = test_camera();
    for (std::uint64_t idx = 0; idx < 8; ++idx) {
        const auto a = generate_scene(object, cam, 99, idx);
        std::size_t full = 0, visible = 0;
        for (int r = 0; r < cam.height; ++r) {
            for (int c = 0; c < cam.width; ++c) {
                full += a.crop.full_mask.at(r, c) != 0;
                visible += a.crop.visible_mask.at(r, c) != 0;
            }
        }
        REQUIRE(full > 0);
        CHECK(static_cast<double>(visible) / static_cast<double>(full) >= 0.1);

        const auto b = generate_scene(object, cam, 99, idx);
        CHECK(a.crop.feature_image.data() == b.crop.feature_image.data());
        CHECK((a.scene.object_pose.rotation - b.scene.object_pose.rotation).cwiseAbs().maxCoeff() ==
              0.0);
    }
}

TEST_CASE("sphere under a head-on light peaks at unit intensity", "[scene]") {
    const auto object = make_object(ObjectSpec::preset(ShapeKind::Sphere), 20000, 2);
    const Camera cam = test_camera();
    Scene scene;
    scene.camera = cam;
    scene.object_pose = Pose(Mat3::Identity(), Vec3(0, 0, 300));
    scene.light_a = Vec3(0, 0, -1);  // toward the camera
    scene.light_b = Vec3(0, 1, 0);
    const auto crop = render_features(scene, object);
    float best = 0.0f;
    for (int r = 0; r < cam.height; ++r) {
        for (int c = 0; c < cam.width; ++c) {
            if (crop.visible_mask.at(r, c)) best = std::max(best, crop.feature_image.at(r, c, 3));
        }
    }
    // The nearest point's normal is (0,0,-1): intensity 1 up to sampling.
    CHECK(best > 0.99f);
    CHECK(best <= 1.0f + 1e-6f);
}

TEST_CASE("feature images are identical across a symmetry rotation", "[scene]") {
    // Rotating a uniform cylinder by a group element and mapping the sample
    // set through the inverse element must give the same observation: this is
    // the visual ambiguity the training must face.
    const auto object = make_object(ObjectSpec::preset(ShapeKind::Cylinder), 4000, 3);
    const Camera cam = test_camera();
    Scene scene;
    scene.camera = cam;
    scene.seed = 5;
    scene.object_pose = Pose(so3_exp(Vec3(0.4, 0.8, -0.2)), Vec3(5, -8, 320));

    const Mat3 sym = so3_exp(Vec3(0, 0, 2.0 * M_PI * 7 / 36.0));
    Scene rotated = scene;
    rotated.object_pose = Pose(scene.object_pose.rotation * sym, scene.object_pose.translation);

    SyntheticObject mapped = object;
    const Mat3 inv = sym.transpose();
    for (Eigen::Index i = 0; i < mapped.surface.size(); ++i) {
        mapped.surface.points.row(i) = (inv * object.surface.point(i)).transpose();
        mapped.surface.normals.row(i) = (inv * object.surface.normal(i)).transpose();
    }

    const auto crop_a = render_features(scene, object);
    const auto crop_b = render_features(rotated, mapped);
    double worst = 0.0;
    for (std::size_t i = 0; i < crop_a.feature_image.data().size(); ++i) {
        worst = std::max(worst, static_cast<double>(std::abs(crop_a.feature_image.data()[i] -
                                                             crop_b.feature_image.data()[i])));
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("background features have zero mean", "[scene]") {
    const auto object = make_object(ObjectSpec::preset(ShapeKind::Blob), 2000, 4);
    const Camera cam = test_camera();
    double sum = 0.0;
    std::size_t count = 0;
    for (std::uint64_t idx = 0; idx < 4; ++idx) {
        const auto gen = generate_scene(object, cam, 17, idx);
        for (int r = 0; r < cam.height; ++r) {
            for (int c = 0; c < cam.width; ++c) {
                if (gen.crop.full_mask.at(r, c) || gen.crop.depth_image.at(r, c) > 0.0f) continue;
                for (int ch = 0; ch < kFeatureChannels; ++ch) {
                    sum += gen.crop.feature_image.at(r, c, ch);
                    ++count;
                }
            }
        }
    }
    REQUIRE(count > 10000);
    const double mean = sum / static_cast<double>(count);
    // sigma = 0.3: 3-sigma band for the empirical mean.
    CHECK(std::abs(mean) < 3.5 * 0.3 / std::sqrt(static_cast<double>(count)));
}

TEST_CASE("occluded pixels keep object coordinates but show occluder features", "[scene]") {
    const auto object = make_object(ObjectSpec::preset(ShapeKind::Blob), 2000, 5);
    const Camera cam = test_camera();
    // Force an occluder dead center in front of the object.
    Scene scene;
    scene.camera = cam;
    scene.seed = 9;
    scene.object_pose = Pose(Mat3::Identity(), Vec3(0, 0, 320));
    Occluder occ;
    occ.kind = ShapeKind::Sphere;
    occ.size = 25.0;
    occ.pose = Pose(Mat3::Identity(), Vec3(0, 0, 200));
    occ.texture_value = 0.77;
    occ.seed = 3;
    scene.occluders.push_back(occ);

    const auto crop = render_features(scene, object);
    std::size_t occluded = 0;
    for (int r = 0; r < cam.height; ++r) {
        for (int c = 0; c < cam.width; ++c) {
            if (!crop.full_mask.at(r, c) || crop.visible_mask.at(r, c)) continue;
            ++occluded;
            // Object coordinate still recorded.
            CHECK(std::isfinite(crop.coord_image.at(r, c, 0)));
            // Scene depth belongs to the occluder, nearer than the object.
            CHECK(crop.depth_image.at(r, c) < 320.0f - 40.0f);
            // Texture channel shows the occluder's flat value.
            CHECK(crop.feature_image.at(r, c, 5) == Catch::Approx(0.77).margin(1e-6));
        }
    }
    CHECK(occluded > 100);
}
