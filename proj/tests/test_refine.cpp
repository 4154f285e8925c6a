#include <catch2/catch_amalgamated.hpp>

#include "corrpose/bench/oracle.hpp"
#include "corrpose/geometry/raycast.hpp"
#include "corrpose/corr/table.hpp"
#include "corrpose/pose/refine.hpp"
#include "corrpose/random.hpp"
#include "corrpose/synth/shapes.hpp"

using namespace corrpose;

namespace {

/// Oracle refinement problem built on the Gaussian-kernel ground-truth
/// embedding: the objective is (up to the density-flat normalizer) the mean
/// negative squared surface distance, so it peaks at the generating pose.
struct OracleRefine {
    Camera cam{90.0, 90.0, 28.0, 28.0, 56, 56};
    SurfaceSampleSet surface;
    Pose truth;
    OracleEmbedding oracle;
    QueryImage qi;
    VecX log_denominator;

    explicit OracleRefine(std::uint64_t seed) {
        const auto mesh = blob_mesh(50.0, 3);
        surface = sample_surface_even(mesh, 2048, 5);
        Rng rng(seed);
        const Vec3 axis = Vec3(rng.normal(), rng.normal(), rng.normal()).normalized();
        truth = Pose(so3_exp(axis * rng.uniform(0.0, M_PI)), Vec3(2.0, -4.0, 280.0));
        oracle = OracleEmbedding::build(surface, 0.5 * surface.nominal_spacing);
        // Exact ray-cast field: splat dilation would bias the optimum.
        qi = build_oracle_query_image(oracle, render_mesh_raycast(truth, cam, mesh),
                                      render_point_zbuffer(truth, cam, surface));
        log_denominator = build_table(qi, oracle.keys, 4ull << 30).log_denominator;
    }

    /// Fixed visible set rendered at `at`, with matching keys; direct-bin
    /// winners only, matching the estimation pipeline.
    std::pair<MatX, MatX> visible_from(const Pose& at) const {
        const auto visible = visible_coordinates(at, cam, surface, /*direct_only=*/true);
        MatX coords(static_cast<Eigen::Index>(visible.size()), 3);
        MatX vkeys(static_cast<Eigen::Index>(visible.size()), 5);
        for (std::size_t i = 0; i < visible.size(); ++i) {
            coords.row(static_cast<Eigen::Index>(i)) = visible[i].coord.transpose();
            vkeys.row(static_cast<Eigen::Index>(i)) = oracle.keys.row(visible[i].sample_index);
        }
        return {coords, vkeys};
    }
};

double surface_displacement(const Pose& a, const Pose& b, const SurfaceSampleSet& s) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < s.size(); i += 8) {
        worst = std::max(worst, (a.apply(s.point(i)) - b.apply(s.point(i))).norm());
    }
    return worst;
}

}  // namespace

TEST_CASE("refinement objective gradient matches finite differences", "[refine]") {
    OracleRefine problem(3);
    const auto [coords, vkeys] = problem.visible_from(problem.truth);
    // Small instance: subsample the visible set so central differences do not
    // straddle bilinear cell boundaries.
    const Eigen::Index subset = 40;
    MatX small_coords(subset, 3), small_keys(subset, 5);
    for (Eigen::Index i = 0; i < subset; ++i) {
        const Eigen::Index src = (i * coords.rows()) / subset;
        small_coords.row(i) = coords.row(src);
        small_keys.row(i) = vkeys.row(src);
    }
    const RefineObjective objective(problem.qi, problem.log_denominator, small_coords, small_keys,
                                    problem.cam, problem.truth);
    Rng rng(17);
    const double h = 1e-5;
    for (int trial = 0; trial < 12; ++trial) {
        Eigen::VectorXd theta(6);
        for (int i = 0; i < 3; ++i) theta[i] = rng.normal() * 0.02;
        for (int i = 3; i < 6; ++i) theta[i] = rng.normal() * 1.0;
        Eigen::VectorXd grad;
        objective.evaluate(theta, &grad);
        for (int i = 0; i < 6; ++i) {
            Eigen::VectorXd plus = theta, minus = theta;
            plus[i] += h;
            minus[i] -= h;
            const double fp = objective.evaluate(plus, nullptr);
            const double fm = objective.evaluate(minus, nullptr);
            const double fd = (fp - fm) / (2.0 * h);
            const double denom = std::max({1e-4, std::abs(fd), std::abs(grad[i])});
            CHECK(std::abs(fd - grad[i]) / denom < 1e-3);
        }
    }
}

TEST_CASE("refinement from the truth barely moves", "[refine]") {
    // The discretized field leaves a shallow rotation/translation valley, so
    // stationarity is judged on worst-case surface displacement; the measured
    // floor sits near half a pixel equivalent (2 mm at this geometry).
    OracleRefine problem(5);
    const auto [coords, vkeys] = problem.visible_from(problem.truth);
    const auto result =
        refine(problem.truth, problem.qi, problem.log_denominator, coords, vkeys, problem.cam);
    CHECK(surface_displacement(result.pose, problem.truth, problem.surface) < 3.0);
}

TEST_CASE("refinement recovers a small in-image offset", "[refine]") {
    OracleRefine problem(8);
    const double px = 280.0 / 90.0;
    Pose start = problem.truth;
    start.translation += Vec3(3.0 * px, -2.0 * px, 0.0);
    start.rotation = so3_exp(Vec3(0.01, -0.015, 0.02)) * start.rotation;

    const auto [coords, vkeys] = problem.visible_from(start);
    const auto result =
        refine(start, problem.qi, problem.log_denominator, coords, vkeys, problem.cam);

    const double before = surface_displacement(start, problem.truth, problem.surface);
    const double after = surface_displacement(result.pose, problem.truth, problem.surface);
    CHECK(before > 10.0);
    CHECK(after < 3.0);
    CHECK(after < 0.25 * before);
}

TEST_CASE("objective trace is non-decreasing", "[refine]") {
    OracleRefine problem(2);
    Pose start = problem.truth;
    start.translation += Vec3(5.0, 4.0, -8.0);
    const auto [coords, vkeys] = problem.visible_from(start);
    const auto result =
        refine(start, problem.qi, problem.log_denominator, coords, vkeys, problem.cam);
    for (std::size_t i = 1; i < result.objective_trace.size(); ++i) {
        CHECK(result.objective_trace[i] >= result.objective_trace[i - 1] - 1e-9);
    }
    CHECK(result.objective_trace.back() >= result.objective_trace.front() - 1e-9);
}

TEST_CASE("empty visible set raises", "[refine]") {
    OracleRefine problem(4);
    const MatX empty_coords(0, 3), empty_keys(0, 5);
    try {
        refine(problem.truth, problem.qi, problem.log_denominator, empty_coords, empty_keys,
               problem.cam);
        FAIL("expected EmptyVisibleSet");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::EmptyVisibleSet);
    }
}
