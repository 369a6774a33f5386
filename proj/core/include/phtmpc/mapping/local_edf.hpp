#pragma once

#include <vector>

#include "phtmpc/mapping/object_library.hpp"
#include "phtmpc/sim/ground_truth.hpp"

namespace phtmpc {

/// Lattice keys of the voxels whose submap distance is within theta_zero.
std::vector<Index3> surface_keys(const ObjectEntry& object, double theta_zero);

/// min(distance to the nearest key, theta_cutoff) on a lattice-aligned grid over `region`.
VoxelGrid edf_from_keys(const std::vector<Index3>& keys, const Region& region, double voxel_size,
                        double theta_cutoff);

/// Truncated EDF of the union of every object's zero-level band.
VoxelGrid build_local_edf(const ObjectLibrary& library, const Vec3& center, const Vec3& half_extent,
                          double theta_zero, double theta_cutoff, double voxel_size);
VoxelGrid build_local_edf(const ObjectLibrary& library, const Region& region, double theta_zero,
                          double theta_cutoff, double voxel_size);

/// Baseline mapper: every observed surface voxel stays occupied forever.
class VoxelBaselineMap {
 public:
  explicit VoxelBaselineMap(const MapperConfig& cfg) : cfg_(cfg) {}

  void update(const std::vector<ObservationSegment>& segments, double time);
  bool empty() const { return !has_data_; }
  /// The cumulative occupied set as a single pseudo-object.
  const ObjectEntry& cumulative() const { return cumulative_; }
  ObjectLibrary as_library() const;

 private:
  MapperConfig cfg_;
  ObjectEntry cumulative_;
  bool has_data_ = false;
};

}  // namespace phtmpc
