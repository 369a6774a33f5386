#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "phtmpc/geometry/robot_model.hpp"
#include "phtmpc/scenario/run_log.hpp"
#include "phtmpc/sim/world.hpp"

namespace phtmpc {

/// Base-clearance bins (m) for the approach-speed statistics.
inline constexpr std::array<double, 5> kApproachBinEdges{0.0, 0.25, 0.5, 1.0, 2.0};
inline constexpr double kNearDistance = 0.5;

struct ApproachBin {
  double lo = 0.0;
  double hi = 0.0;
  int count = 0;
  double mean = 0.0;
  double p95 = 0.0;
  double max = 0.0;
};

struct MetricSample {
  double clearance = 0.0;      ///< whole-body, ground truth
  double base_distance = 0.0;  ///< base centre to nearest surface minus base radius
  double approach = 0.0;       ///< base velocity along the negative distance gradient
};

MetricSample sample_metrics(const WorldState& world, const RobotModel& model, const VecX& q, const VecX& v);

struct MetricsRow {
  std::string trial;
  std::string scenario;
  std::uint64_t seed = 0;
  std::string mapper;
  std::string mode;
  double delta = 0.0;
  double gamma = 0.0;
  double v_des = 0.0;

  bool completed = false;
  bool collision_free = true;
  std::string end_reason;
  double min_clearance = 0.0;
  double path_length = 0.0;
  double completion_time = 0.0;  ///< NaN unless completed
  double min_h = 0.0;            ///< NaN when no solve carried a map
  double max_base_speed = 0.0;
  int samples = 0;
  std::vector<int> subtask_success;
  std::vector<double> subtask_path_length;
  std::vector<ApproachBin> bins;
  double approach_p95_near = 0.0;  ///< NaN without samples below kNearDistance

  /// Approach speeds with base distance below kNearDistance (not written to CSV).
  std::vector<double> near_samples;
  std::vector<double> clearance_samples;
};

/// Recomputes every metric from the log alone (world and state channels).
MetricsRow compute_metrics(const RunLog& log);

std::string metrics_csv_header();
std::string metrics_csv_row(const MetricsRow& row);

/// Nearest-rank percentile; NaN for an empty sample.
double percentile(std::vector<double> values, double p);

/// Connected clusters (26-neighbourhood on the voxel lattice) of mapped
/// occupied points lying farther than `stale_distance` from every true box.
int count_phantoms(const std::vector<Vec3>& occupied_points, const WorldState& world, double voxel_size,
                   double stale_distance = 0.25, int min_cluster = 3);

}  // namespace phtmpc
