#ifndef BOPASK_POSE_HPP
#define BOPASK_POSE_HPP

#include <Eigen/Dense>

#include "bopask/core.hpp"

namespace bopask {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Rigid transform. Translation units are contextual: object poses and all
/// world-frame scene geometry carry millimeters; camera-to-world transforms
/// carry meters (see WorldTransform).
struct Pose {
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();

    Vec3 apply(const Vec3& p) const { return rotation * p + translation; }

    Pose inverse() const {
        Pose inv;
        inv.rotation = rotation.transpose();
        inv.translation = -(inv.rotation * translation);
        return inv;
    }

    // this ∘ other: applies `other` first.
    Pose compose(const Pose& other) const {
        Pose out;
        out.rotation = rotation * other.rotation;
        out.translation = rotation * other.translation + translation;
        return out;
    }

    bool is_orthonormal(double tol = 1e-6) const {
        const Mat3 err = rotation.transpose() * rotation - Mat3::Identity();
        return err.cwiseAbs().maxCoeff() <= tol &&
               std::abs(rotation.determinant() - 1.0) <= tol;
    }
};

inline Mat3 skew(const Vec3& v) {
    Mat3 m;
    m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
    return m;
}

inline Mat3 rot_z(double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    Mat3 m;
    m << c, -s, 0, s, c, 0, 0, 0, 1;
    return m;
}

inline Mat3 rot_axis_angle(const Vec3& axis_unit, double angle) {
    const Mat3 k = skew(axis_unit);
    return Mat3::Identity() + std::sin(angle) * k + (1.0 - std::cos(angle)) * k * k;
}

/// Geodesic distance between two rotations, radians.
inline double rotation_angle_between(const Mat3& a, const Mat3& b) {
    const double tr = (a.transpose() * b).trace();
    return std::acos(std::clamp((tr - 1.0) * 0.5, -1.0, 1.0));
}

}  // namespace bopask

#endif  // BOPASK_POSE_HPP
