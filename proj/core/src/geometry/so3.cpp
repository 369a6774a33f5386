#include "phtmpc/geometry/so3.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace phtmpc {

Mat3 skew(const Vec3& w) {
  Mat3 s;
  s << 0.0, -w.z(), w.y(),
       w.z(), 0.0, -w.x(),
       -w.y(), w.x(), 0.0;
  return s;
}

bool is_rotation(const Mat3& r, double tol) {
  if (!r.allFinite()) return false;
  const double ortho = (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff();
  return ortho <= tol && std::abs(r.determinant() - 1.0) <= tol;
}

Mat3 so3_exp(const Vec3& omega) {
  const double theta = omega.norm();
  const Mat3 k = skew(omega);
  if (theta < 1e-8) {
    return Mat3::Identity() + k + 0.5 * k * k;
  }
  const double a = std::sin(theta) / theta;
  const double b = (1.0 - std::cos(theta)) / (theta * theta);
  return Mat3::Identity() + a * k + b * k * k;
}

Vec3 so3_log(const Mat3& r) {
  if (!is_rotation(r)) {
    throw InvalidRotation("so3_log: matrix is not a proper rotation");
  }
  const Vec3 vee(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
  const double sin2 = vee.norm();  // 2 sin(theta)
  const double cos_theta = std::clamp(0.5 * (r.trace() - 1.0), -1.0, 1.0);
  const double theta = std::atan2(0.5 * sin2, cos_theta);

  if (theta < 1e-7) {
    // First-order branch; exact to O(theta^3).
    return 0.5 * vee;
  }
  if (std::numbers::pi - theta > 1e-6) {
    return (theta / sin2) * vee;
  }

  // Near pi: recover the axis from the symmetric part, R + R^T = 2 cos I + 2 (1 - cos) a a^T.
  const Mat3 b = 0.5 * (r + r.transpose()) - cos_theta * Mat3::Identity();
  Eigen::Index col = 0;
  b.diagonal().maxCoeff(&col);
  Vec3 axis = b.col(col);
  axis.normalize();
  if (sin2 > 1e-12) {
    if (axis.dot(vee) < 0.0) axis = -axis;
  } else {
    Eigen::Index big = 0;
    axis.cwiseAbs().maxCoeff(&big);
    if (axis(big) < 0.0) axis = -axis;
  }
  return theta * axis;
}

Mat3 rot_x(double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  Mat3 r;
  r << 1, 0, 0, 0, c, -s, 0, s, c;
  return r;
}

Mat3 rot_y(double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  Mat3 r;
  r << c, 0, s, 0, 1, 0, -s, 0, c;
  return r;
}

Mat3 rot_z(double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  Mat3 r;
  r << c, -s, 0, s, c, 0, 0, 0, 1;
  return r;
}

Mat3 rpy_to_rotation(double roll, double pitch, double yaw) {
  return rot_z(yaw) * rot_y(pitch) * rot_x(roll);
}

double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * std::numbers::pi);
  if (a <= -std::numbers::pi) a += 2.0 * std::numbers::pi;
  return a;
}

}  // namespace phtmpc
