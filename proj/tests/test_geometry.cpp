#include <catch2/catch_amalgamated.hpp>

#include "corrpose/geometry/camera.hpp"
#include "corrpose/geometry/pose.hpp"
#include "corrpose/random.hpp"

using namespace corrpose;

namespace {

Pose random_pose(Rng& rng, double translation_scale = 100.0) {
    const Vec3 axis = Vec3(rng.normal(), rng.normal(), rng.normal()).normalized();
    const double angle = rng.uniform(0.0, M_PI);
    Vec3 t(rng.normal() * translation_scale, rng.normal() * translation_scale,
           rng.uniform(200.0, 800.0));
    return Pose(so3_exp(axis * angle), t);
}

}  // namespace

TEST_CASE("project maps the principal-point case", "[geometry]") {
    const Camera cam(200.0, 200.0, 112.0, 112.0, 224, 224);
    Eigen::Matrix<double, Eigen::Dynamic, 3> pts(2, 3);
    pts << 0.0, 0.0, 1000.0, 5.0, 0.0, 1000.0;
    const auto proj = project(Pose(), cam, pts);
    CHECK(proj.pixels(0, 0) == Catch::Approx(112.0));
    CHECK(proj.pixels(0, 1) == Catch::Approx(112.0));
    CHECK(proj.depths[0] == Catch::Approx(1000.0));
    CHECK(proj.pixels(1, 0) == Catch::Approx(113.0));
    CHECK(proj.pixels(1, 1) == Catch::Approx(112.0));
}

TEST_CASE("project rejects non-positive depth", "[geometry]") {
    const Camera cam(200.0, 200.0, 112.0, 112.0, 224, 224);
    Eigen::Matrix<double, Eigen::Dynamic, 3> pts(1, 3);
    pts << 0.0, 0.0, -5.0;
    try {
        project(Pose(), cam, pts);
        FAIL("expected NonPositiveDepth");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NonPositiveDepth);
    }
}

TEST_CASE("project then backproject is the identity", "[geometry]") {
    const Camera cam(180.0, 195.0, 54.0, 58.5, 112, 112);
    Rng rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        const Vec3 x_cam(rng.uniform(-80.0, 80.0), rng.uniform(-80.0, 80.0),
                         rng.uniform(50.0, 900.0));
        Eigen::Matrix<double, Eigen::Dynamic, 3> pts(1, 3);
        pts << x_cam.x(), x_cam.y(), x_cam.z();
        const auto proj = project(Pose(), cam, pts);
        const Vec3 back = cam.backproject(proj.pixels.row(0).transpose(), proj.depths[0]);
        CHECK((back - x_cam).norm() < 1e-9);
    }
}

TEST_CASE("pose composition is associative and inverse cancels", "[geometry]") {
    Rng rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        const Pose a = random_pose(rng);
        const Pose b = random_pose(rng);
        const Pose c = random_pose(rng);

        const Pose ab_c = a.compose(b).compose(c);
        const Pose a_bc = a.compose(b.compose(c));
        CHECK((ab_c.rotation - a_bc.rotation).cwiseAbs().maxCoeff() < 1e-9);
        CHECK((ab_c.translation - a_bc.translation).norm() < 1e-7);

        const Pose id = a.inverse().compose(a);
        CHECK((id.rotation - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-9);
        CHECK(id.translation.norm() < 1e-9);
        CHECK(a.valid());
    }
}

TEST_CASE("so3 exp/log round-trip", "[geometry]") {
    Rng rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        const Vec3 axis = Vec3(rng.normal(), rng.normal(), rng.normal()).normalized();
        const double angle = rng.uniform(1e-8, M_PI - 1e-6);
        const Vec3 w = axis * angle;
        const Vec3 back = so3_log(so3_exp(w));
        CHECK((back - w).norm() < 1e-7);
    }
}

TEST_CASE("left jacobian matches finite differences", "[geometry]") {
    Rng rng(5);
    const double h = 1e-6;
    for (int trial = 0; trial < 50; ++trial) {
        const Vec3 w(rng.normal(), rng.normal(), rng.normal());
        const Vec3 v(rng.normal(), rng.normal(), rng.normal());
        const Mat3 jl = so3_left_jacobian(w);
        for (int i = 0; i < 3; ++i) {
            Vec3 dw = Vec3::Zero();
            dw[i] = h;
            const Vec3 fd = (so3_exp(w + dw) * v - so3_exp(w - dw) * v) / (2.0 * h);
            // d(exp(w) v)/dw_i = -[exp(w) v]x J_l(w) e_i
            const Vec3 analytic = -skew(so3_exp(w) * v) * jl.col(i);
            CHECK((fd - analytic).norm() < 1e-5 * std::max(1.0, fd.norm()));
        }
    }
}

TEST_CASE("downscaled camera sees the same rays at block centers", "[geometry]") {
    const Camera cam(150.0, 150.0, 56.0, 56.0, 112, 112);
    const Camera small = cam.downscaled(3);
    CHECK(small.width == 37);
    CHECK(small.height == 37);
    // Block (r', c') covers original rows r'*3 .. r'*3+2; its center is at
    // original coordinate r'*3 + 1.
    for (int rp : {0, 10, 36}) {
        const Vec2 fine(rp * 3 + 1.0, rp * 3 + 1.0);
        const Vec2 coarse(static_cast<double>(rp), static_cast<double>(rp));
        const Vec3 ray_fine = cam.ray(fine);
        const Vec3 ray_coarse = small.ray(coarse);
        CHECK((ray_fine - ray_coarse).norm() < 1e-12);
    }
}
