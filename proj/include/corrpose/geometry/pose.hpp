#pragma once

#include <Eigen/Dense>
#include <cmath>

namespace corrpose {

using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;

inline Mat3 skew(const Vec3& w) {
    Mat3 s;
    s << 0.0, -w.z(), w.y(), w.z(), 0.0, -w.x(), -w.y(), w.x(), 0.0;
    return s;
}

/// Rodrigues exponential map, axis-angle vector -> rotation matrix.
inline Mat3 so3_exp(const Vec3& w) {
    const double theta = w.norm();
    if (theta < 1e-12) {
        const Mat3 s = skew(w);
        return Mat3::Identity() + s + 0.5 * s * s;
    }
    const Mat3 s = skew(w / theta);
    return Mat3::Identity() + std::sin(theta) * s + (1.0 - std::cos(theta)) * s * s;
}

/// Log map, rotation matrix -> axis-angle vector.
inline Vec3 so3_log(const Mat3& r) {
    const double cos_theta = std::min(1.0, std::max(-1.0, (r.trace() - 1.0) * 0.5));
    const double theta = std::acos(cos_theta);
    if (theta < 1e-9) {
        return Vec3(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1)) * 0.5;
    }
    if (theta > M_PI - 1e-6) {
        // Near pi the off-diagonal formula degenerates; recover the axis from
        // the symmetric part.
        Mat3 a = 0.5 * (r + Mat3::Identity());
        Vec3 axis(std::sqrt(std::max(0.0, a(0, 0))), std::sqrt(std::max(0.0, a(1, 1))),
                  std::sqrt(std::max(0.0, a(2, 2))));
        int k = 0;
        axis.cwiseAbs().maxCoeff(&k);
        for (int i = 0; i < 3; ++i) {
            if (i != k && a(k, i) < 0.0) axis[i] = -axis[i];
        }
        axis.normalize();
        return axis * theta;
    }
    Vec3 v(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
    return v * (theta / (2.0 * std::sin(theta)));
}

/// Left Jacobian of SO(3): d exp([w + dw]x) ~ [J_l(w) dw]x exp([w]x).
inline Mat3 so3_left_jacobian(const Vec3& w) {
    const double theta = w.norm();
    const Mat3 s = skew(w);
    if (theta < 1e-6) {
        return Mat3::Identity() + 0.5 * s + (1.0 / 6.0) * s * s;
    }
    const double t2 = theta * theta;
    const double a = (1.0 - std::cos(theta)) / t2;
    const double b = (theta - std::sin(theta)) / (t2 * theta);
    return Mat3::Identity() + a * s + b * s * s;
}

/// Rigid transform from object frame to camera frame, x_cam = R x + t.
/// Translation units follow the object model, canonically millimeters.
struct Pose {
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();

    Pose() = default;
    Pose(const Mat3& r, const Vec3& t) : rotation(r), translation(t) {}

    Vec3 apply(const Vec3& x) const { return rotation * x + translation; }

    Pose compose(const Pose& other) const {
        // this * other: applies `other` first.
        return Pose(rotation * other.rotation, rotation * other.translation + translation);
    }

    Pose inverse() const {
        const Mat3 rt = rotation.transpose();
        return Pose(rt, -(rt * translation));
    }

    /// R orthonormal and right-handed within `tol`.
    bool valid(double tol = 1e-9) const {
        const Mat3 should_be_identity = rotation * rotation.transpose();
        if ((should_be_identity - Mat3::Identity()).cwiseAbs().maxCoeff() > tol) return false;
        return std::abs(rotation.determinant() - 1.0) <= tol;
    }
};

/// Angle of the relative rotation between two poses, radians.
inline double rotation_angle_between(const Pose& a, const Pose& b) {
    return so3_log(a.rotation.transpose() * b.rotation).norm();
}

}  // namespace corrpose
