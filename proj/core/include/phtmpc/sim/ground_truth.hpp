#pragma once

#include "phtmpc/geometry/robot_model.hpp"
#include "phtmpc/geometry/voxel_grid.hpp"
#include "phtmpc/sim/world.hpp"

namespace phtmpc {

/// Axis-aligned region; grids built over it are snapped outward to the global
/// lattice of the requested voxel size.
struct Region {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Ones();
};

VoxelGrid make_aligned_grid(const Region& region, double voxel_size, double fill);

/// Unsigned distance to the union of box surfaces (0 inside boxes), untruncated.
/// An empty world yields `sentinel` everywhere.
VoxelGrid ground_truth_edf(const WorldState& world, const Region& region, double voxel_size,
                           double sentinel = 1e3);

/// Exact unsigned distance from a point to the nearest box surface, or `sentinel`.
double ground_truth_distance(const WorldState& world, const Vec3& p, Vec3* gradient = nullptr,
                             double sentinel = 1e3);

struct Clearance {
  double value = 0.0;
  int sphere = -1;
};

/// min_j (signed distance of sphere centre to the nearest box - r_j).
/// Negative when any sphere penetrates a box.
Clearance whole_body_clearance(const WorldState& world, const RobotModel& model, const VecX& q);

}  // namespace phtmpc
