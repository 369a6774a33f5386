#include "phtmpc/geometry/trajectory.hpp"

#include <algorithm>
#include <stdexcept>

namespace phtmpc {

ReferenceTrajectory ReferenceTrajectory::constant(std::string frame, const Pose3& pose, double t0) {
  ReferenceTrajectory r;
  r.frame = std::move(frame);
  r.times = {t0};
  r.poses = {pose};
  return r;
}

void ReferenceTrajectory::validate() const {
  if (poses.empty() || poses.size() != times.size()) {
    throw std::invalid_argument("reference trajectory: empty or mismatched sample arrays");
  }
  for (size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1])) {
      throw std::invalid_argument("reference trajectory: timestamps must be strictly increasing");
    }
  }
}

namespace {

size_t segment_index(const std::vector<double>& times, double t) {
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  const auto idx = static_cast<size_t>(std::distance(times.begin(), it));
  return idx == 0 ? 0 : idx - 1;
}

}  // namespace

Pose3 ReferenceTrajectory::sample(double t) const {
  if (t <= times.front()) return poses.front();
  if (t >= times.back()) return poses.back();
  const size_t i = segment_index(times, t);
  const double s = (t - times[i]) / (times[i + 1] - times[i]);
  const Pose3& a = poses[i];
  const Pose3& b = poses[i + 1];
  Pose3 out;
  out.position = a.position + s * (b.position - a.position);
  out.orientation = a.orientation * so3_exp(s * so3_log(a.orientation.transpose() * b.orientation));
  return out;
}

Vec6 ReferenceTrajectory::twist(double t) const {
  Vec6 v = Vec6::Zero();
  if (times.size() < 2 || t < times.front() || t >= times.back()) return v;
  const size_t i = segment_index(times, t);
  const double dt = times[i + 1] - times[i];
  const Pose3& a = poses[i];
  const Pose3& b = poses[i + 1];
  v.head<3>() = (b.position - a.position) / dt;
  v.tail<3>() = a.orientation * so3_log(a.orientation.transpose() * b.orientation) / dt;
  return v;
}

}  // namespace phtmpc
