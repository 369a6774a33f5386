#pragma once

#include <string>
#include <vector>

#include "phtmpc/geometry/pose.hpp"

namespace phtmpc {

/// Time-stamped pose samples for one robot frame, held constant after the last sample.
struct ReferenceTrajectory {
  std::string frame;
  std::vector<double> times;
  std::vector<Pose3> poses;

  static ReferenceTrajectory constant(std::string frame, const Pose3& pose, double t0 = 0.0);

  bool empty() const { return poses.empty(); }
  double start_time() const { return times.front(); }
  double end_time() const { return times.back(); }

  /// Piecewise geodesic interpolation; clamps outside [start, end].
  Pose3 sample(double t) const;

  /// World-frame [linear; angular] velocity of the reference at t (zero once held).
  Vec6 twist(double t) const;

  /// Throws std::invalid_argument unless timestamps are strictly increasing.
  void validate() const;
};

}  // namespace phtmpc
