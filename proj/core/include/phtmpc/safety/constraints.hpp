#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "phtmpc/geometry/robot_model.hpp"
#include "phtmpc/geometry/voxel_grid.hpp"

namespace phtmpc {

enum class SafetyMode { CBF, EDF };

struct SafetySpec {
  SafetyMode mode = SafetyMode::CBF;
  double delta_safe = 0.1;
  double gamma = 1.0;
  std::vector<std::pair<int, int>> self_pairs;
  double self_margin = 0.02;

  void validate(const RobotModel& model) const;
  /// Arm-versus-base pairs of the reference platform (adjacent links excluded).
  static std::vector<std::pair<int, int>> default_self_pairs(const RobotModel& model);
};

enum class SlackClass { SoftSafety, Hard };

/// Row over one stage's variables: coeff_x . x + coeff_u . u >= lower.
struct ConstraintRow {
  int stage = 0;
  VecX coeff_x;
  VecX coeff_u;
  double lower = 0.0;
  SlackClass slack = SlackClass::SoftSafety;
  /// Constraint value at the linearization point (h_j or the pair clearance).
  double value = 0.0;
};

struct BarrierValue {
  double h = 0.0;
  VecX gradient;  ///< dh/dq
  bool clamped = false;
};

/// h_j = field(center_j) - r_j - delta_safe, chained through the sphere
/// Jacobian. Outside the grid: h = -delta_safe, zero gradient, clamped set.
BarrierValue barrier_value(const VoxelGrid& grid, const Kinematics& kin, int sphere, double delta_safe);
BarrierValue barrier_value(const VoxelGrid& grid, const RobotModel& model, const VecX& q, int sphere,
                           double delta_safe);

/// Per-sphere rows at one stage, linearized at the state (q_bar, v_bar).
///   CBF: dh/dq . v + gamma h >= 0
///   EDF: h + dh/dq . (q - q_bar) >= 0
std::vector<ConstraintRow> safety_rows(const VoxelGrid& grid, const RobotModel& model, const VecX& x_bar, int stage,
                                       const SafetySpec& spec);

struct PairValue {
  double value = 0.0;
  VecX gradient;
  Vec3 direction = Vec3::UnitZ();
  bool fallback = false;  ///< centres coincided; direction was not measured
};

/// ||p_i - p_j|| - r_i - r_j - margin and its gradient. `previous` is used
/// as the separation direction when the centres coincide.
PairValue self_collision_value(const Kinematics& kin, int i, int j, double margin,
                               const std::optional<Vec3>& previous = std::nullopt);

std::vector<ConstraintRow> self_collision_rows(const RobotModel& model, const VecX& q, int stage,
                                               const std::vector<std::pair<int, int>>& pairs, double margin);

}  // namespace phtmpc
