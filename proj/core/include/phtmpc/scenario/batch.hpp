#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "phtmpc/scenario/config.hpp"
#include "phtmpc/scenario/metrics.hpp"

namespace phtmpc {

struct GridCell {
  MapperKind mapper = MapperKind::Object;
  SafetyMode mode = SafetyMode::CBF;
  double gamma = 1.0;  ///< ignored for EDF cells
  double delta = 0.1;
  double v_des = 0.5;
};

/// Grid file: lists "mode", "gamma", "delta", "v_des" and optional "mapper",
/// combined as a cartesian product. EDF cells do not expand over gamma.
/// An explicit "cells" list of {mode, gamma} replaces the mode x gamma part.
std::vector<GridCell> parse_grid(const nlohmann::json& doc);

/// "a..b" inclusive, or a single integer.
std::vector<std::uint64_t> parse_seed_range(const std::string& text);

struct AggregateRow {
  std::string mapper;
  std::string mode;
  double delta = 0.0;
  double gamma = 0.0;
  std::optional<double> v_des;  ///< empty for the row pooled over speeds
  int trials = 0;
  int errors = 0;
  double completed_rate = 0.0;
  double collision_free_rate = 0.0;
  double mean_min_clearance = 0.0;
  double min_min_clearance = 0.0;
  double p95_approach_near = 0.0;  ///< pooled over every trial in the group
  double mean_path_length = 0.0;
  double mean_completion_time = 0.0;
  double min_h = 0.0;
};

struct BatchOptions {
  std::string out_dir;      ///< empty: nothing written
  bool write_logs = false;  ///< one JSONL file per trial under out_dir/runs
  std::function<void(size_t done, size_t total, const MetricsRow&)> progress;
};

struct BatchResult {
  std::vector<MetricsRow> rows;
  std::vector<AggregateRow> aggregates;
};

/// Seeds x grid cells, seed-major. A failing trial yields a row whose
/// end_reason starts with "error" and the batch continues.
BatchResult run_batch(const ScenarioConfig& base, const std::vector<std::uint64_t>& seeds,
                      const std::vector<GridCell>& grid, const BatchOptions& options = {});

std::vector<AggregateRow> aggregate(const std::vector<MetricsRow>& rows);
std::string aggregate_csv_header();
std::string aggregate_csv_row(const AggregateRow& row);

/// Applies one grid cell to a scenario template.
ScenarioConfig apply_cell(const ScenarioConfig& base, const GridCell& cell);

}  // namespace phtmpc
