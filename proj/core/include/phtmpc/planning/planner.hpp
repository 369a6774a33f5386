#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "phtmpc/geometry/trajectory.hpp"
#include "phtmpc/geometry/voxel_grid.hpp"

namespace phtmpc {

struct Cell {
  int i = 0;
  int j = 0;
  bool operator==(const Cell& o) const { return i == o.i && j == o.j; }
  bool operator!=(const Cell& o) const { return !(*this == o); }
};

struct OccupancyGrid2D {
  Vec2 origin = Vec2::Zero();  ///< centre of cell (0, 0)
  double cell = 0.1;
  int nx = 0;
  int ny = 0;
  std::vector<std::uint8_t> occupied;
  std::uint64_t source_version = 0;

  OccupancyGrid2D() = default;
  OccupancyGrid2D(const Vec2& origin, double cell, int nx, int ny);

  bool in_bounds(const Cell& c) const { return c.i >= 0 && c.j >= 0 && c.i < nx && c.j < ny; }
  size_t index(const Cell& c) const { return static_cast<size_t>(c.j) * static_cast<size_t>(nx) + static_cast<size_t>(c.i); }
  bool blocked(const Cell& c) const { return !in_bounds(c) || occupied[index(c)] != 0; }
  Vec2 center(const Cell& c) const { return origin + cell * Vec2(c.i, c.j); }
  Cell cell_of(const Vec2& p) const;
  size_t count_occupied() const;
};

/// Cell (i, j) sits on EDF node column (i, j); it is occupied when the
/// smallest EDF value over nodes with z in [z_low, z_high] is below
/// max(inflation, cell size).
OccupancyGrid2D occupancy_from_edf(const VoxelGrid& edf, double z_low, double z_high, double inflation,
                                   std::uint64_t version = 0);

/// Marks every cell whose centre lies outside [xmin, xmax] x [ymin, ymax] as occupied.
void block_outside(OccupancyGrid2D& grid, double xmin, double ymin, double xmax, double ymax);

struct AStarResult {
  bool found = false;
  std::vector<Cell> cells;
  double cost = 0.0;
};

/// 8-connected A* with the octile heuristic and no corner cutting. Ties on f
/// go to the smaller g, then to the lexicographically smaller (j, i).
AStarResult astar(const OccupancyGrid2D& grid, const Cell& start, const Cell& goal);

/// Every cell touched by the segment a-b, corners included.
std::vector<Cell> supercover(const OccupancyGrid2D& grid, const Vec2& a, const Vec2& b);
bool line_of_sight(const OccupancyGrid2D& grid, const Vec2& a, const Vec2& b);

struct PlanResult {
  bool ok = false;
  std::vector<Vec2> polyline;  ///< smoothed
  std::vector<Vec2> raw;       ///< A* cell centres, endpoints replaced by the waypoints
  double raw_cost = 0.0;
  std::vector<int> snapped_waypoints;
  std::string diagnostic;
};

/// Segment-wise A* through the waypoints (first entry is the start), then
/// greedy line-of-sight shortcutting.
PlanResult plan_path(const OccupancyGrid2D& grid, const std::vector<Vec2>& waypoints, double snap_radius = 0.5);

std::vector<Vec2> smooth_path(const OccupancyGrid2D& grid, const std::vector<Vec2>& path);
double polyline_length(const std::vector<Vec2>& path);

enum class HeadingMode { Tangent, Fixed };

struct TimingOptions {
  double v_des = 0.5;
  double a_max = 1.0;
  double v0 = 0.0;
  double t0 = 0.0;
  double sample_dt = 0.1;
  HeadingMode heading = HeadingMode::Tangent;
  double fixed_yaw = 0.0;
  double lookahead = 0.3;
  /// Heading used before the path defines one and for zero-length paths.
  double initial_yaw = 0.0;
};

/// Trapezoidal arc-length profile (starting at v0) sampled every sample_dt.
ReferenceTrajectory time_parameterize(const std::vector<Vec2>& polyline, const TimingOptions& opt);

}  // namespace phtmpc
