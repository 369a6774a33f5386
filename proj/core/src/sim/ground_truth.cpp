#include "phtmpc/sim/ground_truth.hpp"

#include <cmath>
#include <limits>

namespace phtmpc {

VoxelGrid make_aligned_grid(const Region& region, double voxel_size, double fill) {
  Vec3 lo, hi;
  Index3 dims{};
  for (int a = 0; a < 3; ++a) {
    lo(a) = std::floor(region.min(a) / voxel_size + 1e-9) * voxel_size;
    hi(a) = std::ceil(region.max(a) / voxel_size - 1e-9) * voxel_size;
    dims[static_cast<size_t>(a)] = static_cast<int>(std::llround((hi(a) - lo(a)) / voxel_size)) + 1;
  }
  return VoxelGrid(lo, voxel_size, dims, fill);
}

double ground_truth_distance(const WorldState& world, const Vec3& p, Vec3* gradient, double sentinel) {
  const double d = world_signed_distance(world, p, gradient, sentinel);
  if (world.boxes.empty()) return sentinel;
  if (d < 0.0) {
    if (gradient) gradient->setZero();
    return 0.0;
  }
  return d;
}

VoxelGrid ground_truth_edf(const WorldState& world, const Region& region, double voxel_size, double sentinel) {
  VoxelGrid grid = make_aligned_grid(region, voxel_size, sentinel);
  if (world.boxes.empty()) return grid;
  const auto& d = grid.dims();
  for (int k = 0; k < d[2]; ++k) {
    for (int j = 0; j < d[1]; ++j) {
      for (int i = 0; i < d[0]; ++i) {
        grid.at(i, j, k) = ground_truth_distance(world, grid.node_position(i, j, k), nullptr, sentinel);
      }
    }
  }
  return grid;
}

Clearance whole_body_clearance(const WorldState& world, const RobotModel& model, const VecX& q) {
  Clearance out{std::numeric_limits<double>::infinity(), -1};
  if (world.boxes.empty()) {
    out.value = 1e3;
    return out;
  }
  const Kinematics kin(model, q);
  for (size_t s = 0; s < model.spheres.size(); ++s) {
    const Vec3 c = kin.sphere_center(static_cast<int>(s));
    const double v = world_signed_distance(world, c) - model.spheres[s].radius;
    if (v < out.value) {
      out.value = v;
      out.sphere = static_cast<int>(s);
    }
  }
  return out;
}

}  // namespace phtmpc
