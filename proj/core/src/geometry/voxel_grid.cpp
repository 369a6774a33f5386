#include "phtmpc/geometry/voxel_grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace phtmpc {

VoxelGrid::VoxelGrid(const Vec3& origin, double voxel_size, const Index3& dims, double fill)
    : origin_(origin), voxel_size_(voxel_size), dims_(dims) {
  if (!(voxel_size > 0.0)) throw std::invalid_argument("voxel grid: voxel size must be positive");
  for (int d : dims) {
    if (d <= 0) throw std::invalid_argument("voxel grid: dimensions must be positive");
  }
  values_.assign(static_cast<size_t>(dims[0]) * static_cast<size_t>(dims[1]) * static_cast<size_t>(dims[2]), fill);
}

Index3 VoxelGrid::unravel(size_t idx) const {
  const auto nx = static_cast<size_t>(dims_[0]);
  const auto ny = static_cast<size_t>(dims_[1]);
  return {static_cast<int>(idx % nx), static_cast<int>((idx / nx) % ny), static_cast<int>(idx / (nx * ny))};
}

bool VoxelGrid::contains(const Vec3& p) const {
  const Vec3 hi = max_corner();
  return (p.array() >= origin_.array()).all() && (p.array() <= hi.array()).all();
}

GridSample trilinear_sample(const VoxelGrid& grid, const Vec3& p) {
  GridSample out;
  const Vec3 lo = grid.origin();
  const Vec3 hi = grid.max_corner();
  Vec3 q = p;
  for (int a = 0; a < 3; ++a) {
    if (!(q(a) >= lo(a)) || !(q(a) <= hi(a))) {
      out.clamped = true;
      q(a) = std::clamp(std::isfinite(q(a)) ? q(a) : lo(a), lo(a), hi(a));
    }
  }

  const double h = grid.voxel_size();
  const auto& dims = grid.dims();
  int cell[3];
  double frac[3];
  for (int a = 0; a < 3; ++a) {
    const double s = (q(a) - lo(a)) / h;
    if (dims[a] == 1) {
      cell[a] = 0;
      frac[a] = 0.0;
      continue;
    }
    int c = static_cast<int>(std::floor(s));
    c = std::clamp(c, 0, dims[a] - 2);
    cell[a] = c;
    frac[a] = s - c;
  }
  auto node = [&](int di, int dj, int dk) {
    const int i = std::min(cell[0] + di, dims[0] - 1);
    const int j = std::min(cell[1] + dj, dims[1] - 1);
    const int k = std::min(cell[2] + dk, dims[2] - 1);
    return grid.at(i, j, k);
  };
  const double c000 = node(0, 0, 0), c100 = node(1, 0, 0), c010 = node(0, 1, 0), c110 = node(1, 1, 0);
  const double c001 = node(0, 0, 1), c101 = node(1, 0, 1), c011 = node(0, 1, 1), c111 = node(1, 1, 1);
  const double x = frac[0], y = frac[1], z = frac[2];

  const double c00 = c000 + x * (c100 - c000);
  const double c10 = c010 + x * (c110 - c010);
  const double c01 = c001 + x * (c101 - c001);
  const double c11 = c011 + x * (c111 - c011);
  const double c0 = c00 + y * (c10 - c00);
  const double c1 = c01 + y * (c11 - c01);
  out.value = c0 + z * (c1 - c0);

  const double dx0 = (c100 - c000) + y * ((c110 - c010) - (c100 - c000));
  const double dx1 = (c101 - c001) + y * ((c111 - c011) - (c101 - c001));
  const double dx = dx0 + z * (dx1 - dx0);
  const double dy = (1.0 - z) * (c10 - c00) + z * (c11 - c01);
  const double dz = c1 - c0;
  out.gradient = Vec3(dims[0] > 1 ? dx / h : 0.0, dims[1] > 1 ? dy / h : 0.0, dims[2] > 1 ? dz / h : 0.0);
  return out;
}

}  // namespace phtmpc
