#include "phtmpc/sim/depth_camera.hpp"

#include <cmath>
#include <numbers>

#include "phtmpc/errors.hpp"

namespace phtmpc {

void DepthCameraSpec::validate() const {
  if (!(max_range > 0.0)) throw ConfigError("camera: max_range must be positive");
  if (!(hfov > 0.0 && hfov < std::numbers::pi) || !(vfov > 0.0 && vfov < std::numbers::pi)) {
    throw ConfigError("camera: field of view must lie in (0, pi)");
  }
  if (!(latency >= 0.0)) throw ConfigError("camera: latency must be non-negative");
  if (cols < 1 || rows < 1) throw ConfigError("camera: ray counts must be positive");
  if (!(rate > 0.0)) throw ConfigError("camera: frame rate must be positive");
  if (!(noise_sigma >= 0.0)) throw ConfigError("camera: noise sigma must be non-negative");
  if (!mount.is_valid()) throw ConfigError("camera: mount pose is not a valid transform");
}

Vec3 DepthCameraSpec::ray_direction(int row, int col) const {
  const double az = 0.5 * hfov - (col + 0.5) * hfov / cols;
  const double el = 0.5 * vfov - (row + 0.5) * vfov / rows;
  return Vec3(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el));
}

std::optional<std::pair<int, int>> DepthCameraSpec::pixel_of(const Vec3& d) const {
  const double horiz = std::hypot(d.x(), d.y());
  const double az = std::atan2(d.y(), d.x());
  const double el = std::atan2(d.z(), horiz);
  if (std::abs(az) > 0.5 * hfov || std::abs(el) > 0.5 * vfov) return std::nullopt;
  int col = static_cast<int>(std::floor((0.5 * hfov - az) / hfov * cols));
  int row = static_cast<int>(std::floor((0.5 * vfov - el) / vfov * rows));
  col = std::clamp(col, 0, cols - 1);
  row = std::clamp(row, 0, rows - 1);
  return std::make_pair(row, col);
}

std::vector<Vec3> DepthFrame::hit_points() const {
  std::vector<Vec3> out;
  for (size_t i = 0; i < points.size(); ++i) {
    if (!miss[i]) out.push_back(points[i]);
  }
  return out;
}

DepthFrame render_depth(const WorldState& world, const Pose3& camera_pose, const DepthCameraSpec& spec,
                        std::mt19937_64& rng) {
  DepthFrame frame;
  frame.camera_pose = camera_pose;
  frame.spec = spec;
  const size_t n = static_cast<size_t>(spec.rows) * static_cast<size_t>(spec.cols);
  frame.range.assign(n, spec.max_range);
  frame.hit.assign(n, 0);
  frame.points.reserve(n);
  frame.miss.reserve(n);
  std::normal_distribution<double> noise(0.0, 1.0);

  const Vec3 origin = camera_pose.position;
  for (int r = 0; r < spec.rows; ++r) {
    for (int c = 0; c < spec.cols; ++c) {
      const Vec3 dir = camera_pose.orientation * spec.ray_direction(r, c);
      double best = std::numeric_limits<double>::infinity();
      if (dir.z() < -1e-12) {
        const double t = (world.ground_z - origin.z()) / dir.z();
        if (t >= 0.0) best = t;
      }
      for (const auto& b : world.boxes) {
        if (auto t = intersect_ray_box(origin, dir, b); t && *t < best) best = *t;
      }
      const size_t idx = frame.ray_index(r, c);
      if (best <= spec.max_range) {
        double t = best;
        if (spec.noise_sigma > 0.0) t = std::max(0.0, t + spec.noise_sigma * noise(rng));
        frame.range[idx] = t;
        frame.hit[idx] = 1;
        frame.points.push_back(origin + t * dir);
        frame.miss.push_back(0);
      } else {
        frame.points.push_back(origin + spec.max_range * dir);
        frame.miss.push_back(1);
      }
    }
  }
  return frame;
}

}  // namespace phtmpc
