#include <catch2/catch_amalgamated.hpp>

#include "corrpose/random.hpp"
#include "corrpose/synth/mssd.hpp"

using namespace corrpose;

namespace {

Pose random_pose(Rng& rng) {
    const Vec3 axis = Vec3(rng.normal(), rng.normal(), rng.normal()).normalized();
    return Pose(so3_exp(axis * rng.uniform(0.0, M_PI)),
                Vec3(rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(200, 500)));
}

}  // namespace

TEST_CASE("distance to self is zero", "[mssd]") {
    const auto obj = make_object(ObjectSpec::preset(ShapeKind::Cylinder), 800, 1);
    Rng rng(3);
    const Pose pose = random_pose(rng);
    CHECK(symmetry_aware_distance(pose, pose, obj.surface, obj.symmetry) == 0.0);
}

TEST_CASE("group elements are distance zero", "[mssd]") {
    const auto cube = make_object(ObjectSpec::preset(ShapeKind::Cube), 800, 2);
    Rng rng(5);
    for (std::size_t k = 0; k < cube.symmetry.rotations.size(); ++k) {
        const Pose pose = random_pose(rng);
        const Pose composed(pose.rotation * cube.symmetry.rotations[k], pose.translation);
        // Exact for discrete groups.
        CHECK(symmetry_aware_distance(pose, composed, cube.surface, cube.symmetry) < 1e-9);
    }

    const auto cyl = make_object(ObjectSpec::preset(ShapeKind::Cylinder), 800, 3);
    const Pose pose = random_pose(rng);
    // An off-grid axial rotation: zero within the 10-degree discretization.
    const Pose composed(pose.rotation * so3_exp(Vec3(0, 0, 0.13)), pose.translation);
    const double d = symmetry_aware_distance(pose, composed, cyl.surface, cyl.symmetry);
    const double worst_step = 2.0 * std::sin(M_PI / 36.0) * 71.0;  // chord at max radius
    CHECK(d < worst_step);
}

TEST_CASE("pure translation measures exactly its norm", "[mssd]") {
    const auto obj = make_object(ObjectSpec::preset(ShapeKind::Blob), 800, 4);
    Rng rng(7);
    const Pose pose = random_pose(rng);
    Pose moved = pose;
    moved.translation += Vec3(6.0, -8.0, 0.0);  // norm 10
    CHECK(symmetry_aware_distance(pose, moved, obj.surface, obj.symmetry) ==
          Catch::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("sphere distance is translation distance", "[mssd]") {
    const auto obj = make_object(ObjectSpec::preset(ShapeKind::Sphere), 500, 5);
    Rng rng(9);
    const Pose a = random_pose(rng);
    Pose b = random_pose(rng);
    b.translation = a.translation + Vec3(3.0, 4.0, 0.0);
    CHECK(symmetry_aware_distance(a, b, obj.surface, obj.symmetry) == Catch::Approx(5.0));
}

TEST_CASE("mssd is symmetric in its arguments", "[mssd]") {
    const auto obj = make_object(ObjectSpec::preset(ShapeKind::Cube), 600, 6);
    Rng rng(11);
    for (int trial = 0; trial < 10; ++trial) {
        const Pose a = random_pose(rng);
        const Pose b = random_pose(rng);
        const double ab = symmetry_aware_distance(a, b, obj.surface, obj.symmetry);
        const double ba = symmetry_aware_distance(b, a, obj.surface, obj.symmetry);
        // Swapping arguments evaluates the max over the group-mapped sample
        // set; the discrepancy is Lipschitz-bounded by twice the spacing.
        CHECK(std::abs(ab - ba) <= 2.0 * obj.surface.nominal_spacing);
    }
}

TEST_CASE("mssd satisfies the triangle inequality within slack", "[mssd]") {
    const auto obj = make_object(ObjectSpec::preset(ShapeKind::Cylinder), 600, 7);
    Rng rng(13);
    for (int trial = 0; trial < 10; ++trial) {
        const Pose a = random_pose(rng);
        const Pose b = random_pose(rng);
        const Pose c = random_pose(rng);
        const double ab = symmetry_aware_distance(a, b, obj.surface, obj.symmetry);
        const double bc = symmetry_aware_distance(b, c, obj.surface, obj.symmetry);
        const double ac = symmetry_aware_distance(a, c, obj.surface, obj.symmetry);
        // Discretization slack: one 10-degree step at the outermost radius.
        const double slack = 2.0 * std::sin(M_PI / 36.0) * 71.0;
        CHECK(ac <= ab + bc + slack);
    }
}
