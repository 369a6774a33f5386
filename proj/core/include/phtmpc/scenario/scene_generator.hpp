#pragma once

#include <cstdint>

#include "phtmpc/scenario/config.hpp"

namespace phtmpc {

struct GeneratedScene {
  WorldState world;
  int attempts = 0;
};

/// Seeded random box scene. Rejects layouts whose corridor endpoints are not
/// connected on the ground-truth occupancy inflated by `inflation`; throws
/// ConfigError when max_attempts is exhausted.
GeneratedScene generate_scene(const SceneGeneratorSpec& spec, std::uint64_t seed, double inflation,
                              const PlannerSpec& planner, double voxel_size);

}  // namespace phtmpc
