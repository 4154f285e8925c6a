#include <catch2/catch_amalgamated.hpp>

#include "corrpose/synth/shapes.hpp"
#include "corrpose/train/batch.hpp"

using namespace corrpose;

namespace {

/// Crop with a hand-placed mask; coord/feature images derived from pixel
/// position so samples are checkable.
RenderedCrop toy_crop(int h, int w, const std::vector<std::pair<int, int>>& mask_pixels) {
    RenderedCrop crop;
    crop.coord_image = ImageF(h, w, 3, std::numeric_limits<float>::quiet_NaN());
    crop.full_mask = ImageB(h, w, 1, 0);
    crop.visible_mask = ImageB(h, w, 1, 0);
    crop.feature_image = ImageF(h, w, 2, 0.0f);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            crop.feature_image.at(r, c, 0) = static_cast<float>(r);
            crop.feature_image.at(r, c, 1) = static_cast<float>(c);
        }
    }
    for (auto [r, c] : mask_pixels) {
        crop.full_mask.at(r, c) = 1;
        crop.visible_mask.at(r, c) = 1;
        crop.coord_image.at(r, c, 0) = static_cast<float>(r);
        crop.coord_image.at(r, c, 1) = static_cast<float>(c);
        crop.coord_image.at(r, c, 2) = 1.0f;
    }
    return crop;
}

}  // namespace

TEST_CASE("single-pixel mask pins every pair", "[batch]") {
    const auto crop = toy_crop(8, 8, {{3, 5}});
    SurfaceSampleSet surface;
    surface.points = Eigen::MatrixXd::Random(16, 3);
    surface.normals = Eigen::MatrixXd::Zero(16, 3);
    TrainConfig cfg;
    cfg.pairs_per_crop = 32;
    cfg.negatives_per_crop = 8;
    cfg.mask_pixels_per_crop = 16;
    Rng rng(4);
    const auto batch = sample_crop_batch(crop, surface, cfg, rng);
    for (int i = 0; i < cfg.pairs_per_crop; ++i) {
        CHECK(batch.pixel_rows[static_cast<std::size_t>(i)] == 3);
        CHECK(batch.pixel_cols[static_cast<std::size_t>(i)] == 5);
        CHECK(batch.positive_coords(i, 0) == Catch::Approx(3.0));
        CHECK(batch.positive_coords(i, 1) == Catch::Approx(5.0));
        CHECK(batch.features(i, 0) == Catch::Approx(3.0));
        CHECK(batch.features(i, 1) == Catch::Approx(5.0));
    }
}

TEST_CASE("empty mask raises", "[batch]") {
    const auto crop = toy_crop(8, 8, {});
    SurfaceSampleSet surface;
    surface.points = Eigen::MatrixXd::Random(4, 3);
    surface.normals = surface.points;
    TrainConfig cfg;
    Rng rng(1);
    try {
        sample_crop_batch(crop, surface, cfg, rng);
        FAIL("expected EmptyMask");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::EmptyMask);
    }
}

TEST_CASE("pair pixels are uniform over the mask", "[batch]") {
    // Chi-square over a 4-pixel mask at 10^5 draws.
    const std::vector<std::pair<int, int>> mask = {{0, 0}, {1, 3}, {5, 5}, {7, 2}};
    const auto crop = toy_crop(8, 8, mask);
    SurfaceSampleSet surface;
    surface.points = Eigen::MatrixXd::Random(8, 3);
    surface.normals = surface.points;
    TrainConfig cfg;
    cfg.pairs_per_crop = 100000;
    cfg.negatives_per_crop = 1;
    cfg.mask_pixels_per_crop = 1;
    Rng rng(99);
    const auto batch = sample_crop_batch(crop, surface, cfg, rng);
    std::map<std::pair<int, int>, int> counts;
    for (std::size_t i = 0; i < batch.pixel_rows.size(); ++i) {
        counts[{batch.pixel_rows[i], batch.pixel_cols[i]}]++;
    }
    REQUIRE(counts.size() == 4);
    const double expected = 100000.0 / 4.0;
    double chi2 = 0.0;
    for (const auto& [px, n] : counts) {
        chi2 += (n - expected) * (n - expected) / expected;
    }
    // 3 dof: chi2 < 11.34 accepts at p > 0.01.
    CHECK(chi2 < 11.34);
}

TEST_CASE("negatives follow surface areas on a cube", "[batch]") {
    // Uniform draws over an even sample set of a stretched box: face
    // frequencies must match face areas within 3 sigma (multinomial).
    const auto mesh = box_mesh(2.0, 1.0, 1.0);
    const auto surface = sample_surface_even(mesh, 4000, 7);
    const auto crop = toy_crop(4, 4, {{1, 1}});
    TrainConfig cfg;
    cfg.pairs_per_crop = 1;
    cfg.negatives_per_crop = 60000;
    cfg.mask_pixels_per_crop = 1;
    Rng rng(123);
    const auto batch = sample_crop_batch(crop, surface, cfg, rng);

    // Classify negatives by face: x = +/-1 planes are 1x1, others 2x1.
    const double total_area = 2.0 * (1.0 + 2.0 + 2.0);
    std::map<int, int> counts;  // 0/1: +/-x, 2/3: +/-y, 4/5: +/-z
    for (int i = 0; i < cfg.negatives_per_crop; ++i) {
        const Vec3 p = batch.negative_coords.row(i).transpose();
        int face;
        if (std::abs(std::abs(p.x()) - 1.0) < 1e-9) face = p.x() > 0 ? 0 : 1;
        else if (std::abs(std::abs(p.y()) - 0.5) < 1e-9) face = p.y() > 0 ? 2 : 3;
        else face = p.z() > 0 ? 4 : 5;
        counts[face]++;
    }
    const auto check_face = [&](int face, double area) {
        const double p = area / total_area;
        const double mean = cfg.negatives_per_crop * p;
        const double sigma = std::sqrt(cfg.negatives_per_crop * p * (1 - p));
        CHECK(std::abs(counts[face] - mean) < 3.0 * sigma + 0.02 * mean);
    };
    check_face(0, 1.0);
    check_face(1, 1.0);
    check_face(2, 2.0);
    check_face(3, 2.0);
    check_face(4, 2.0);
    check_face(5, 2.0);
}

TEST_CASE("mask supervision is uniform over the crop", "[batch]") {
    const auto crop = toy_crop(6, 6, {{2, 2}, {3, 3}});
    SurfaceSampleSet surface;
    surface.points = Eigen::MatrixXd::Random(8, 3);
    surface.normals = surface.points;
    TrainConfig cfg;
    cfg.pairs_per_crop = 1;
    cfg.negatives_per_crop = 1;
    cfg.mask_pixels_per_crop = 36000;
    Rng rng(5);
    const auto batch = sample_crop_batch(crop, surface, cfg, rng);
    // Expected positive-label fraction 2/36.
    int positive = 0;
    for (auto l : batch.mask_labels) positive += l;
    const double frac = static_cast<double>(positive) / cfg.mask_pixels_per_crop;
    CHECK(frac == Catch::Approx(2.0 / 36.0).margin(0.01));
}
