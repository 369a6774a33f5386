#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "phtmpc/geometry/robot_model.hpp"
#include "phtmpc/geometry/types.hpp"

namespace phtmpc {

/// Axis-height extrusion: a yawed box resting on the ground or on `level`
/// identical boxes below it.
struct BoxObject {
  int id = 0;
  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;
  Vec3 size = Vec3::Constant(0.6);
  int level = 0;

  double z_min() const { return level * size.z(); }
  double z_max() const { return z_min() + size.z(); }
  Vec3 center() const { return Vec3(x, y, z_min() + 0.5 * size.z()); }
};

struct ChangeTrigger {
  std::optional<double> time;  ///< simulation time (s)
  std::string event;           ///< named event, used when `time` is empty
};

enum class ChangeKind { Remove, Insert, Relocate };

struct ScriptedChange {
  ChangeTrigger trigger;
  ChangeKind kind = ChangeKind::Relocate;
  int id = 0;
  BoxObject box;                      ///< Insert payload
  double x = 0.0, y = 0.0, yaw = 0.0; ///< Relocate target
};

struct WorldState {
  double time = 0.0;
  std::vector<BoxObject> boxes;
  double ground_z = 0.0;
  std::uint64_t seed = 0;
  /// Number of scripted changes already applied.
  size_t applied_changes = 0;

  const BoxObject* find(int id) const;
};

/// Applies, in order, every not-yet-applied change whose trigger is satisfied
/// at time `t` (or whose event is in `reached`). Stops at the first change
/// whose trigger is not yet satisfied.
WorldState apply_scripted_changes(const WorldState& world, const std::vector<ScriptedChange>& events, double t,
                                  const std::set<std::string>& reached = {});

/// Load-time validation: time triggers non-decreasing, unique ids, and every
/// referenced id present when its change fires. Throws ConfigError.
void validate_script(const WorldState& initial, const std::vector<ScriptedChange>& events);

/// Signed distance from a point to a box (negative inside); optional outward gradient.
double box_signed_distance(const BoxObject& box, const Vec3& p, Vec3* gradient = nullptr);

/// Entry distance along a unit ray; nullopt when missed. A ray starting
/// inside the box reports 0.
std::optional<double> intersect_ray_box(const Vec3& origin, const Vec3& dir, const BoxObject& box);

/// Minimum signed distance to any box; `empty_value` when there are none.
double world_signed_distance(const WorldState& world, const Vec3& p, Vec3* gradient = nullptr,
                             double empty_value = 1e3);

}  // namespace phtmpc
