#include <catch2/catch_amalgamated.hpp>

#include "corrpose/pose/ap3p.hpp"
#include "corrpose/random.hpp"

using namespace corrpose;

namespace {

Pose random_pose(Rng& rng) {
    const Vec3 axis = Vec3(rng.normal(), rng.normal(), rng.normal()).normalized();
    const double angle = rng.uniform(0.0, M_PI);
    return Pose(so3_exp(axis * angle),
                Vec3(rng.uniform(-60.0, 60.0), rng.uniform(-60.0, 60.0), rng.uniform(300.0, 900.0)));
}

/// Three object points that project in front of the camera under the pose.
struct Instance {
    Eigen::Matrix3d object_points;
    Eigen::Matrix<double, 3, 2> image_points;
    Pose truth;
};

Instance random_instance(Rng& rng, const Camera& cam) {
    for (;;) {
        Instance inst;
        inst.truth = random_pose(rng);
        for (int i = 0; i < 3; ++i) {
            inst.object_points.row(i) << rng.uniform(-50.0, 50.0), rng.uniform(-50.0, 50.0),
                rng.uniform(-50.0, 50.0);
        }
        const Vec3 p1 = inst.object_points.row(0), p2 = inst.object_points.row(1),
                   p3 = inst.object_points.row(2);
        // Reject near-collinear triples: those are the documented error path.
        if ((p2 - p1).cross(p3 - p1).norm() < 200.0) continue;
        bool ok = true;
        for (int i = 0; i < 3; ++i) {
            const Vec3 x = inst.truth.apply(inst.object_points.row(i).transpose());
            if (x.z() < 50.0) {
                ok = false;
                break;
            }
            inst.image_points.row(i) = cam.project_cam(x).transpose();
        }
        if (ok) return inst;
    }
}

double reprojection_residual(const Pose& pose, const Instance& inst, const Camera& cam) {
    double worst = 0.0;
    for (int i = 0; i < 3; ++i) {
        const Vec3 x = pose.apply(inst.object_points.row(i).transpose());
        if (x.z() <= 0.0) return std::numeric_limits<double>::infinity();
        worst = std::max(worst, (cam.project_cam(x) - inst.image_points.row(i).transpose()).norm());
    }
    return worst;
}

}  // namespace

TEST_CASE("ap3p recovers the generating pose", "[ap3p]") {
    const Camera cam(400.0, 400.0, 112.0, 112.0, 224, 224);
    Rng rng(7);
    for (int trial = 0; trial < 500; ++trial) {
        const auto inst = random_instance(rng, cam);
        const auto poses = ap3p(inst.image_points, inst.object_points, cam);
        REQUIRE(!poses.empty());
        CHECK(poses.size() <= 4);
        double best_rot = std::numeric_limits<double>::max();
        double best_trans = std::numeric_limits<double>::max();
        for (const auto& pose : poses) {
            CHECK(reprojection_residual(pose, inst, cam) < 1e-6);
            best_rot = std::min(best_rot, rotation_angle_between(pose, inst.truth));
            best_trans = std::min(best_trans, (pose.translation - inst.truth.translation).norm());
        }
        CHECK(best_rot < 1e-6);
        CHECK(best_trans < 1e-6 * inst.truth.translation.norm());
    }
}

TEST_CASE("collinear object points raise DegenerateConfiguration", "[ap3p]") {
    const Camera cam(400.0, 400.0, 112.0, 112.0, 224, 224);
    Eigen::Matrix3d object_points;
    object_points << 0, 0, 0, 10, 0, 0, 20, 0, 0;
    Eigen::Matrix<double, 3, 2> image_points;
    image_points << 100, 100, 110, 100, 120, 100;
    try {
        ap3p(image_points, object_points, cam);
        FAIL("expected DegenerateConfiguration");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DegenerateConfiguration);
    }
}

TEST_CASE("coincident rays raise DegenerateConfiguration", "[ap3p]") {
    const Camera cam(400.0, 400.0, 112.0, 112.0, 224, 224);
    Eigen::Matrix3d object_points;
    object_points << 0, 0, 0, 30, 0, 0, 0, 40, 0;
    Eigen::Matrix<double, 3, 2> image_points;
    image_points << 80, 90, 80, 90, 150, 60;
    try {
        ap3p(image_points, object_points, cam);
        FAIL("expected DegenerateConfiguration");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DegenerateConfiguration);
    }
}

TEST_CASE("symmetric viewing returns multiple valid solutions", "[ap3p]") {
    // Equilateral triangle centered on the optical axis, viewed head-on: the
    // classic multi-solution configuration.
    const Camera cam(400.0, 400.0, 112.0, 112.0, 224, 224);
    const double side = 60.0;
    Eigen::Matrix3d object_points;
    object_points << 0.0, side / std::sqrt(3.0), 0.0,
                     -side / 2.0, -side / (2.0 * std::sqrt(3.0)), 0.0,
                     side / 2.0, -side / (2.0 * std::sqrt(3.0)), 0.0;
    const Pose truth(Mat3::Identity(), Vec3(0, 0, 500));
    Eigen::Matrix<double, 3, 2> image_points;
    for (int i = 0; i < 3; ++i) {
        image_points.row(i) =
            cam.project_cam(truth.apply(object_points.row(i).transpose())).transpose();
    }
    const auto poses = ap3p(image_points, object_points, cam);
    CHECK(poses.size() >= 2);
    Instance inst{object_points, image_points, truth};
    for (const auto& pose : poses) {
        CHECK(reprojection_residual(pose, inst, cam) < 1e-6);
    }
}

TEST_CASE("adversarial near-degenerate inputs return errors, never crash", "[ap3p]") {
    const Camera cam(400.0, 400.0, 112.0, 112.0, 224, 224);
    Rng rng(99);
    int errors = 0, solved = 0;
    for (int trial = 0; trial < 2000; ++trial) {
        Eigen::Matrix3d object_points;
        Eigen::Matrix<double, 3, 2> image_points;
        const double squash = std::pow(10.0, rng.uniform(-9.0, 0.0));
        for (int i = 0; i < 3; ++i) {
            object_points.row(i) << rng.uniform(-50.0, 50.0), squash * rng.uniform(-1.0, 1.0),
                rng.uniform(-50.0, 50.0) * squash;
            image_points.row(i) << rng.uniform(-500.0, 700.0), rng.uniform(-500.0, 700.0);
        }
        try {
            const auto poses = ap3p(image_points, object_points, cam);
            solved += static_cast<int>(!poses.empty());
        } catch (const Error&) {
            ++errors;
        }
    }
    CHECK(errors + solved == 2000);
    CHECK(errors > 0);
}
