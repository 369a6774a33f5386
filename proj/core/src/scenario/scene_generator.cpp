#include "phtmpc/scenario/scene_generator.hpp"

#include <numbers>
#include <random>

#include "phtmpc/errors.hpp"
#include "phtmpc/planning/planner.hpp"

namespace phtmpc {

namespace {

OccupancyGrid2D corridor_grid(const WorldState& world, const SceneGeneratorSpec& spec, double inflation,
                              const PlannerSpec& planner, double h) {
  const double margin = 1.0;
  const double xmin = std::min({spec.area[0], spec.corridor_start.x(), spec.corridor_goal.x()}) - margin;
  const double xmax = std::max({spec.area[2], spec.corridor_start.x(), spec.corridor_goal.x()}) + margin;
  const double ymin = std::min({spec.area[1], spec.corridor_start.y(), spec.corridor_goal.y()}) - margin;
  const double ymax = std::max({spec.area[3], spec.corridor_start.y(), spec.corridor_goal.y()}) + margin;
  const Region region{Vec3(xmin, ymin, planner.z_low), Vec3(xmax, ymax, planner.z_high)};
  auto grid = occupancy_from_edf(ground_truth_edf(world, region, h), planner.z_low, planner.z_high, inflation);
  if (planner.bounds) {
    const auto& b = *planner.bounds;
    block_outside(grid, b[0], b[1], b[2], b[3]);
  }
  return grid;
}

}  // namespace

GeneratedScene generate_scene(const SceneGeneratorSpec& spec, std::uint64_t seed, double inflation,
                              const PlannerSpec& planner, double voxel_size) {
  const double half = 0.5 * spec.box_size;
  // Footprint must stay inside the area for any yaw.
  const double inset = half * std::numbers::sqrt2;
  if (spec.area[2] - spec.area[0] <= 2 * inset || spec.area[3] - spec.area[1] <= 2 * inset) {
    throw ConfigError("scene: area too small for the box size");
  }
  for (int attempt = 0; attempt < spec.max_attempts; ++attempt) {
    std::mt19937_64 rng(seed * 1000003ULL + static_cast<std::uint64_t>(attempt));
    std::uniform_int_distribution<int> count(spec.min_boxes, spec.max_boxes);
    std::uniform_real_distribution<double> ux(spec.area[0] + inset, spec.area[2] - inset);
    std::uniform_real_distribution<double> uy(spec.area[1] + inset, spec.area[3] - inset);
    std::uniform_real_distribution<double> uyaw(-std::numbers::pi / 4, std::numbers::pi / 4);
    std::bernoulli_distribution stack(spec.stack_probability);

    WorldState world;
    world.seed = seed;
    const int n = count(rng);
    int id = 1;
    int placed = 0;
    for (int tries = 0; placed < n && tries < 50 * n; ++tries) {
      const Vec2 p(ux(rng), uy(rng));
      const double yaw = uyaw(rng);
      bool clash = false;
      for (const auto& b : world.boxes) {
        if ((Vec2(b.x, b.y) - p).norm() < spec.min_separation) clash = true;
      }
      if (clash) continue;
      BoxObject b;
      b.id = id++;
      b.x = p.x();
      b.y = p.y();
      b.yaw = yaw;
      b.size = Vec3::Constant(spec.box_size);
      world.boxes.push_back(b);
      ++placed;
      if (stack(rng)) {
        BoxObject top = b;
        top.id = id++;
        top.level = 1;
        world.boxes.push_back(top);
      }
    }
    if (placed < n) continue;
    const auto grid = corridor_grid(world, spec, inflation, planner, voxel_size);
    const auto a = grid.cell_of(spec.corridor_start), g = grid.cell_of(spec.corridor_goal);
    if (astar(grid, a, g).found) return {world, attempt + 1};
  }
  throw ConfigError("scene: no layout with a free corridor after " + std::to_string(spec.max_attempts) +
                    " attempts");
}

}  // namespace phtmpc
