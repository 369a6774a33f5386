#pragma once

#include "phtmpc/geometry/so3.hpp"
#include "phtmpc/geometry/types.hpp"

namespace phtmpc {

/// Rigid transform in SE(3).
struct Pose3 {
  Vec3 position = Vec3::Zero();
  Mat3 orientation = Mat3::Identity();

  static Pose3 identity() { return {}; }
  static Pose3 planar(double x, double y, double yaw);

  Pose3 operator*(const Pose3& other) const {
    return {position + orientation * other.position, orientation * other.orientation};
  }
  Vec3 transform(const Vec3& p) const { return position + orientation * p; }
  Pose3 inverse() const {
    const Mat3 rt = orientation.transpose();
    return {-(rt * position), rt};
  }
  Mat4 matrix() const;

  bool is_valid(double tol = kRotationTolerance) const {
    return position.allFinite() && is_rotation(orientation, tol);
  }
};

/// Tracking error [p_d - p ; Log(R^T R_d)].
Vec6 pose_error(const Pose3& current, const Pose3& desired);

}  // namespace phtmpc
