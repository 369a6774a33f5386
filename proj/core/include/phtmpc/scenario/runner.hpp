#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "phtmpc/mapping/snapshot.hpp"
#include "phtmpc/scenario/config.hpp"
#include "phtmpc/scenario/metrics.hpp"
#include "phtmpc/scenario/run_log.hpp"

namespace phtmpc {

enum class RunOutcome { Completed, Collision, DurationCap };

std::string to_string(RunOutcome outcome);
/// 0 completed, 2 collision, 1 when the duration cap ended the run.
int exit_code(RunOutcome outcome);

struct RunResult {
  RunLog log;
  MetricsRow metrics;
  RunOutcome outcome = RunOutcome::DurationCap;
  WorldState final_world;
  SnapshotPtr final_snapshot;
  /// Wall-clock seconds per HTMPC call; kept out of the log unless requested.
  std::vector<double> solve_seconds;
};

/// Closed loop: sense, map, plan, solve, integrate. Deterministic for a
/// given (config, seed). Throws ConfigError before simulating on bad input.
RunResult run_scenario(const ScenarioConfig& config, std::uint64_t seed, const std::string& trial = "");

/// Mapped occupied voxel centres of a snapshot (empty for ground-truth maps).
std::vector<Vec3> snapshot_occupied_points(const MapSnapshot& snapshot);

}  // namespace phtmpc
