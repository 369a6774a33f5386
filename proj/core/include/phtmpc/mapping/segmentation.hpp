#pragma once

#include <vector>

#include "phtmpc/geometry/types.hpp"

namespace phtmpc {

struct SegmentationConfig {
  double ground_height = 0.05;   ///< points at or below this z are ground
  double cluster_radius = 0.15;  ///< single-linkage radius
  int min_points = 20;
};

struct ObservationSegment {
  std::vector<Vec3> points;
  Vec3 centroid = Vec3::Zero();
  Vec3 lower = Vec3::Zero();
  Vec3 upper = Vec3::Zero();
};

ObservationSegment make_segment(std::vector<Vec3> points);

/// Ground removal plus Euclidean single-linkage clustering. Output order is
/// deterministic (by the first input index of each cluster).
std::vector<ObservationSegment> segment_cloud(const std::vector<Vec3>& points, const SegmentationConfig& cfg);

}  // namespace phtmpc
