#include "phtmpc/geometry/pose.hpp"

namespace phtmpc {

Pose3 Pose3::planar(double x, double y, double yaw) {
  return {Vec3(x, y, 0.0), rot_z(yaw)};
}

Mat4 Pose3::matrix() const {
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = orientation;
  m.topRightCorner<3, 1>() = position;
  return m;
}

Vec6 pose_error(const Pose3& current, const Pose3& desired) {
  if (!is_rotation(current.orientation) || !is_rotation(desired.orientation)) {
    throw InvalidRotation("pose_error: pose orientation is not a proper rotation");
  }
  Vec6 e;
  e.head<3>() = desired.position - current.position;
  e.tail<3>() = so3_log(current.orientation.transpose() * desired.orientation);
  return e;
}

}  // namespace phtmpc
