#pragma once

#include <stdexcept>
#include <string>

#include "phtmpc/geometry/types.hpp"

namespace phtmpc {

/// Thrown when a matrix handed to a rotation routine is not in SO(3).
class InvalidRotation : public std::invalid_argument {
 public:
  explicit InvalidRotation(const std::string& what) : std::invalid_argument(what) {}
};

inline constexpr double kRotationTolerance = 1e-9;

Mat3 skew(const Vec3& w);

/// True when ||R^T R - I||_max and |det R - 1| are both within `tol`.
bool is_rotation(const Mat3& r, double tol = kRotationTolerance);

/// Rodrigues exponential of an axis-angle vector.
Mat3 so3_exp(const Vec3& omega);

/// Matrix logarithm on SO(3), returning the axis-angle vector with norm in [0, pi].
///
/// At an angle of exactly pi the axis is defined up to sign; the returned
/// vector then has its largest-magnitude component positive.
Vec3 so3_log(const Mat3& r);

Mat3 rot_x(double angle);
Mat3 rot_y(double angle);
Mat3 rot_z(double angle);

/// Roll-pitch-yaw (applied as Rz(yaw) * Ry(pitch) * Rx(roll)).
Mat3 rpy_to_rotation(double roll, double pitch, double yaw);

/// Wraps an angle to (-pi, pi].
double wrap_angle(double a);

}  // namespace phtmpc
