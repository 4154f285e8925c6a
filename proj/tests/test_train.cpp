#include <catch2/catch_amalgamated.hpp>

#include "corrpose/train/trainer.hpp"

using namespace corrpose;

namespace {

/// Learnable toy: a flat square "object" where pixel (r, c) corresponds to
/// surface point (x, y, 0) and the features are the coordinates themselves.
/// Any training progress must push L_E below the uniform baseline.
struct ToyProblem {
    std::vector<RenderedCrop> crops;
    SurfaceSampleSet surface;

    explicit ToyProblem(int crop_count = 4, int size = 12) {
        const int grid = 16;
        surface.points.resize(grid * grid, 3);
        surface.normals.resize(grid * grid, 3);
        for (int i = 0; i < grid; ++i) {
            for (int j = 0; j < grid; ++j) {
                const double x = -1.0 + 2.0 * (i + 0.5) / grid;
                const double y = -1.0 + 2.0 * (j + 0.5) / grid;
                surface.points.row(i * grid + j) << x, y, 0.0;
                surface.normals.row(i * grid + j) << 0.0, 0.0, 1.0;
            }
        }
        surface.nominal_spacing = 2.0 / grid;

        for (int k = 0; k < crop_count; ++k) {
            RenderedCrop crop;
            crop.coord_image = ImageF(size, size, 3, std::numeric_limits<float>::quiet_NaN());
            crop.full_mask = ImageB(size, size, 1, 0);
            crop.visible_mask = ImageB(size, size, 1, 0);
            crop.feature_image = ImageF(size, size, 2, 0.0f);
            for (int r = 0; r < size; ++r) {
                for (int c = 0; c < size; ++c) {
                    const double x = -1.0 + 2.0 * (r + 0.5) / size;
                    const double y = -1.0 + 2.0 * (c + 0.5) / size;
                    crop.feature_image.at(r, c, 0) = static_cast<float>(x);
                    crop.feature_image.at(r, c, 1) = static_cast<float>(y);
                    // Mask the left half so BCE sees both labels.
                    if (c < size / 2) {
                        crop.full_mask.at(r, c) = 1;
                        crop.visible_mask.at(r, c) = 1;
                        crop.coord_image.at(r, c, 0) = static_cast<float>(x);
                        crop.coord_image.at(r, c, 1) = static_cast<float>(y);
                        crop.coord_image.at(r, c, 2) = 0.0f;
                    }
                }
            }
            crops.push_back(std::move(crop));
        }
    }
};

TrainConfig toy_config() {
    TrainConfig cfg;
    cfg.embed_dim = 6;
    cfg.pairs_per_crop = 64;
    cfg.negatives_per_crop = 64;
    cfg.mask_pixels_per_crop = 64;
    cfg.batch_size = 2;
    cfg.epochs = 100;
    cfg.warmup_steps = 50;
    cfg.key_hidden = {32, 32};
    cfg.query_hidden = {32, 32};
    cfg.rng_seed = 11;
    return cfg;
}

}  // namespace

TEST_CASE("training beats the uniform baseline", "[train]") {
    ToyProblem toy;
    auto cfg = toy_config();
    Trainer trainer(toy.crops, toy.surface, cfg);
    for (int i = 0; i < 200; ++i) {
        REQUIRE(trainer.step());
    }
    const double uniform = std::log(static_cast<double>(cfg.negatives_per_crop) + 1.0);
    double tail = 0.0;
    for (std::size_t i = trainer.trace.size() - 10; i < trainer.trace.size(); ++i) {
        tail += trainer.trace[i].loss_embed / 10.0;
    }
    CHECK(tail < uniform - 0.3);
    // Mask loss should also be clearly below ln 2 on a half-masked crop.
    CHECK(trainer.trace.back().loss_mask < std::log(2.0));
}

TEST_CASE("zero epochs leaves models at initialization", "[train]") {
    ToyProblem toy;
    auto cfg = toy_config();
    cfg.epochs = 0;
    const auto result = train(toy.crops, toy.surface, cfg);
    const SirenMlp fresh_key = siren_init(3, cfg.key_hidden, cfg.embed_dim, cfg.omega0,
                                          mix_seed(cfg.rng_seed, 0x6b6579ULL));
    CHECK(pack_parameters(result.key_model) == pack_parameters(fresh_key));
    CHECK(result.trace.empty());
}

TEST_CASE("training is deterministic given the seed", "[train]") {
    ToyProblem toy;
    auto cfg = toy_config();
    cfg.epochs = 3;
    const auto a = train(toy.crops, toy.surface, cfg);
    const auto b = train(toy.crops, toy.surface, cfg);
    CHECK(pack_parameters(a.key_model) == pack_parameters(b.key_model));
    CHECK(pack_parameters(a.query_model) == pack_parameters(b.query_model));
    REQUIRE(a.trace.size() == b.trace.size());
    for (std::size_t i = 0; i < a.trace.size(); ++i) {
        CHECK(a.trace[i].loss_embed == b.trace[i].loss_embed);
    }
}

TEST_CASE("a resumed trainer reproduces the next step bit-identically", "[train]") {
    ToyProblem toy;
    auto cfg = toy_config();
    Trainer reference(toy.crops, toy.surface, cfg);
    reference.step();
    reference.step();

    Trainer restarted(toy.crops, toy.surface, cfg);
    restarted.step();
    // Clone state at step 1 (models, moments, rng stream position) and verify
    // the continuation matches the uninterrupted run exactly.
    Trainer resumed = restarted;
    resumed.step();
    CHECK(pack_parameters(resumed.key_model) == pack_parameters(reference.key_model));
    CHECK(pack_parameters(resumed.query_model) == pack_parameters(reference.query_model));
    CHECK(resumed.trace.back().loss_embed == reference.trace.back().loss_embed);
}

TEST_CASE("first trace row carries the warmup learning rate", "[train]") {
    ToyProblem toy;
    auto cfg = toy_config();
    Trainer trainer(toy.crops, toy.surface, cfg);
    trainer.step();
    REQUIRE(trainer.trace.size() == 1);
    CHECK(trainer.trace[0].step == 1);
    CHECK(trainer.trace[0].effective_lr ==
          Catch::Approx(cfg.lr_query / static_cast<double>(cfg.warmup_steps)));
}
