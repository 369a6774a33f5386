#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "phtmpc/geometry/voxel_grid.hpp"
#include "phtmpc/mapping/consistency.hpp"
#include "phtmpc/mapping/segmentation.hpp"
#include "phtmpc/sim/depth_camera.hpp"

namespace phtmpc {

/// Nearest node of the global lattice with spacing h.
Index3 lattice_index(const Vec3& p, double h);

struct ObjectEntry {
  int id = 0;
  Vec3 anchor = Vec3::Zero();
  double heading = 0.0;
  /// Unsigned distance to the occupied voxels, lattice aligned.
  VoxelGrid submap;
  std::vector<std::uint8_t> occupied;
  ConsistencyParams params;
  int observations = 0;
  double last_seen = 0.0;

  size_t occupied_count() const;
  std::vector<Vec3> occupied_points() const;
};

struct ObjectLibrary {
  std::vector<ObjectEntry> objects;
  int next_id = 1;

  const ObjectEntry* find(int id) const;
};

struct MapperConfig {
  ConsistencyConfig consistency;
  SegmentationConfig segmentation;
  ConsistencyParams prior;
  double voxel_size = 0.1;
  int submap_padding = 5;  ///< voxels around the occupied set
  double gate = 0.5;
  double theta_change = 0.3;
  double theta_zero = 0.1;
  double theta_cutoff = 1.5;
  double f_min = 0.2;
  double f_miss = 0.5;
  /// A voxel counts as seen-through when the ray range exceeds its depth by this much.
  double free_margin = 0.15;
  int semantic_label = 0;

  void validate() const;
};

struct Association {
  std::vector<std::pair<int, int>> pairs;  ///< (segment index, object index)
  std::vector<int> unmatched_segments;
  std::vector<int> unobserved_expected;  ///< object indices
};

/// True when p lies inside the frame's field of view and within range.
bool in_view(const DepthFrame& frame, const Vec3& p, double* depth = nullptr, size_t* ray = nullptr);

/// Hungarian assignment on centroid distance, gated at `gate`. An object
/// counts as expected when any occupied voxel is inside some frame's view.
Association associate(const std::vector<ObservationSegment>& segments, const ObjectLibrary& library, double gate,
                      const std::vector<DepthFrame>& frames);

/// Mean object-EDF value at the segment points, clamped to delta_max. Points
/// outside the submap use the boundary value plus the distance to the
/// boundary. nullopt when the in-bounds fraction is below f_min.
std::optional<double> geometric_consistency(const ObjectEntry& object, const ObservationSegment& segment,
                                            const MapperConfig& cfg);

ObjectEntry make_object(int id, const ObservationSegment& segment, const MapperConfig& cfg, double time);

/// Union of the previous occupied voxels and the segment voxels, with the
/// submap grown when needed and its distance field recomputed exactly.
ObjectEntry integrate_segment(const ObjectEntry& object, const ObservationSegment& segment, const MapperConfig& cfg);

/// Fraction of the object's occupied voxels that some ray observed as free.
double free_space_coverage(const ObjectEntry& object, const std::vector<DepthFrame>& frames,
                           const MapperConfig& cfg);

struct ConsistencyEvent {
  enum class Kind { Created, Observed, Negative, Removed };
  double time = 0.0;
  int id = 0;
  Kind kind = Kind::Observed;
  ConsistencyParams params;
  double expected = 0.0;
  double delta = 0.0;
  bool clamped = false;
};

std::string to_string(ConsistencyEvent::Kind kind);

/// One mapper step. Mutates the library and returns the per-object events.
std::vector<ConsistencyEvent> process_frame(ObjectLibrary& library, const std::vector<ObservationSegment>& segments,
                                            const std::vector<DepthFrame>& frames, const MapperConfig& cfg,
                                            double time);

}  // namespace phtmpc
