#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "phtmpc/geometry/types.hpp"

namespace phtmpc {

using Index3 = std::array<int, 3>;

/// Dense scalar field sampled on the nodes origin + voxel_size * (i, j, k).
class VoxelGrid {
 public:
  VoxelGrid() = default;
  VoxelGrid(const Vec3& origin, double voxel_size, const Index3& dims, double fill = 0.0);

  const Vec3& origin() const { return origin_; }
  double voxel_size() const { return voxel_size_; }
  const Index3& dims() const { return dims_; }
  size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double& at(int i, int j, int k) { return values_[linear(i, j, k)]; }
  double at(int i, int j, int k) const { return values_[linear(i, j, k)]; }
  double& operator[](size_t idx) { return values_[idx]; }
  double operator[](size_t idx) const { return values_[idx]; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

  size_t linear(int i, int j, int k) const {
    return (static_cast<size_t>(k) * static_cast<size_t>(dims_[1]) + static_cast<size_t>(j)) *
               static_cast<size_t>(dims_[0]) +
           static_cast<size_t>(i);
  }
  Index3 unravel(size_t idx) const;

  Vec3 node_position(int i, int j, int k) const {
    return origin_ + voxel_size_ * Vec3(i, j, k);
  }
  Vec3 max_corner() const {
    return node_position(dims_[0] - 1, dims_[1] - 1, dims_[2] - 1);
  }
  bool contains(const Vec3& p) const;
  bool in_range(int i, int j, int k) const {
    return i >= 0 && j >= 0 && k >= 0 && i < dims_[0] && j < dims_[1] && k < dims_[2];
  }

 private:
  Vec3 origin_ = Vec3::Zero();
  double voxel_size_ = 1.0;
  Index3 dims_{0, 0, 0};
  std::vector<double> values_;
};

struct GridSample {
  double value = 0.0;
  Vec3 gradient = Vec3::Zero();
  /// Set when the query fell outside the grid and was evaluated at the
  /// nearest point of the bounding box instead.
  bool clamped = false;
};

/// Trilinear interpolation with the exact in-cell gradient of the trilinear form.
GridSample trilinear_sample(const VoxelGrid& grid, const Vec3& p);

}  // namespace phtmpc
