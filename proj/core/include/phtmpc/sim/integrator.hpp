#pragma once

#include "phtmpc/geometry/robot_model.hpp"

namespace phtmpc {

struct IntegrationResult {
  RobotState state;
  /// True when any velocity had to be clamped to its limit.
  bool clamped = false;
};

/// Exact double-integrator step followed by a velocity clamp to `v_max`.
/// Throws std::invalid_argument for dt <= 0 or a non-finite input.
IntegrationResult integrate_robot(const RobotState& state, const VecX& u, double dt, const VecX& v_max);

}  // namespace phtmpc
