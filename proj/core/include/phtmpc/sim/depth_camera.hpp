#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "phtmpc/geometry/pose.hpp"
#include "phtmpc/sim/world.hpp"

namespace phtmpc {

/// Pinhole-free angular depth sensor: rays on a uniform azimuth/elevation
/// grid around the camera +x axis (y left, z up).
struct DepthCameraSpec {
  std::string frame = "base";
  Pose3 mount;
  double hfov = 1.4;
  double vfov = 1.0;
  int cols = 48;
  int rows = 36;
  double max_range = 3.0;
  double noise_sigma = 0.0;
  double latency = 0.0;
  double rate = 5.0;

  void validate() const;
  Vec3 ray_direction(int row, int col) const;
  /// Nearest ray for a camera-frame direction; nullopt outside the field of view.
  std::optional<std::pair<int, int>> pixel_of(const Vec3& dir_camera) const;
};

struct DepthFrame {
  double stamp = 0.0;
  Pose3 camera_pose;
  DepthCameraSpec spec;
  /// Per-ray measured range (max_range for misses), row-major.
  std::vector<double> range;
  std::vector<std::uint8_t> hit;
  /// World-frame points: hits, plus max-range endpoints for misses.
  std::vector<Vec3> points;
  std::vector<std::uint8_t> miss;

  size_t ray_index(int row, int col) const { return static_cast<size_t>(row) * spec.cols + col; }
  std::vector<Vec3> hit_points() const;
};

DepthFrame render_depth(const WorldState& world, const Pose3& camera_pose, const DepthCameraSpec& spec,
                        std::mt19937_64& rng);

}  // namespace phtmpc
