#include <catch2/catch_amalgamated.hpp>

#include "corrpose/corr/table.hpp"
#include "corrpose/random.hpp"

using namespace corrpose;

namespace {

MatX randn(Rng& rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
    MatX m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = rng.normal() * scale;
    }
    return m;
}

QueryImage make_query_image(const MatX& queries, int h, int w) {
    QueryImage qi;
    qi.height = h;
    qi.width = w;
    qi.queries = queries;
    qi.mask_prob = VecX::Constant(h * w, 0.5);
    return qi;
}

}  // namespace

TEST_CASE("identical keys give a uniform distribution", "[table]") {
    MatX keys = MatX::Ones(16, 4);
    VecX q = VecX::Random(4);
    const auto dist = key_distribution(q, keys);
    for (Eigen::Index i = 0; i < 16; ++i) {
        CHECK(dist.probs[i] == Catch::Approx(1.0 / 16.0).epsilon(1e-12));
    }
}

TEST_CASE("a strongly aligned query concentrates its key", "[table]") {
    // Orthogonal unit keys; the query points at key 0 with norm 50.
    MatX keys = MatX::Identity(4, 4);
    VecX q = VecX::Zero(4);
    q[0] = 50.0;
    const auto dist = key_distribution(q, keys);
    CHECK(dist.probs[0] > 0.999);
}

TEST_CASE("probabilities sum to one", "[table]") {
    Rng rng(5);
    for (int trial = 0; trial < 30; ++trial) {
        const MatX keys = randn(rng, 64, 6, 2.0);
        VecX q = randn(rng, 6, 1, 3.0).col(0);
        const auto dist = key_distribution(q, keys);
        CHECK(std::abs(dist.probs.sum() - 1.0) < 1e-12);
    }
}

TEST_CASE("1x1 query image table equals key_distribution", "[table]") {
    Rng rng(9);
    const MatX keys = randn(rng, 32, 5);
    const MatX q = randn(rng, 1, 5);
    const auto table = build_table(make_query_image(q, 1, 1), keys);
    const auto direct = key_distribution(q.row(0).transpose(), keys);
    for (Eigen::Index i = 0; i < 32; ++i) {
        CHECK(table.at(0, 0, i) == Catch::Approx(direct.probs[i]).margin(1e-7));
    }
    CHECK(table.log_denominator[0] == Catch::Approx(direct.log_denominator).epsilon(1e-12));
}

TEST_CASE("table slices are normalized and the denominator is recomputable", "[table]") {
    Rng rng(21);
    const int h = 6, w = 5;
    const MatX keys = randn(rng, 48, 4, 1.5);
    const MatX queries = randn(rng, h * w, 4, 1.5);
    const auto table = build_table(make_query_image(queries, h, w), keys);
    for (Eigen::Index p = 0; p < h * w; ++p) {
        double sum = 0.0;
        for (Eigen::Index i = 0; i < 48; ++i) sum += table.slice(p)[i];
        CHECK(std::abs(sum - 1.0) < 1e-5);

        // Independent log-sum-exp recomputation.
        const VecX logits = keys * queries.row(p).transpose();
        const double m = logits.maxCoeff();
        const double lse = m + std::log((logits.array() - m).exp().sum());
        CHECK(table.log_denominator[p] == Catch::Approx(lse).margin(1e-10));
    }
}

TEST_CASE("table memory budget raises TableTooLarge", "[table]") {
    Rng rng(2);
    const MatX keys = randn(rng, 512, 3);
    const MatX queries = randn(rng, 64, 3);
    try {
        build_table(make_query_image(queries, 8, 8), keys, 1024);
        FAIL("expected TableTooLarge");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::TableTooLarge);
    }
}

TEST_CASE("maxpool3 on a constant table is the identity", "[table]") {
    QueryImage qi = make_query_image(MatX::Zero(12, 3), 4, 3);
    const MatX keys = MatX::Zero(7, 3);
    auto table = build_table(qi, keys);  // uniform 1/7 everywhere
    const auto pooled = maxpool3(table);
    CHECK(pooled.probs == table.probs);
}

TEST_CASE("maxpool3 replicates a spike over its 3x3 block", "[table]") {
    Rng rng(3);
    const int h = 6, w = 6;
    const MatX keys = randn(rng, 5, 3);
    auto table = build_table(make_query_image(MatX::Zero(h * w, 3), h, w), keys);
    // Inject a spike at (2, 4) for index 1.
    table.slice(table.pixel_index(2, 4))[1] = 9.0f;
    const auto pooled = maxpool3(table);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const bool in_block = std::abs(r - 2) <= 1 && std::abs(c - 4) <= 1;
            if (in_block) {
                CHECK(pooled.at(r, c, 1) == 9.0f);
            } else {
                CHECK(pooled.at(r, c, 1) < 9.0f);
            }
        }
    }
}

TEST_CASE("pooling dominates the original elementwise", "[table]") {
    Rng rng(17);
    const int h = 5, w = 7;
    const MatX keys = randn(rng, 24, 4);
    const auto table = build_table(make_query_image(randn(rng, h * w, 4), h, w), keys);
    const auto pooled = maxpool3(table);
    for (std::size_t i = 0; i < table.probs.size(); ++i) {
        CHECK(pooled.probs[i] >= table.probs[i]);
    }
}
