#include "phtmpc/safety/constraints.hpp"

#include "phtmpc/errors.hpp"

namespace phtmpc {

void SafetySpec::validate(const RobotModel& model) const {
  if (!(delta_safe >= 0.0)) throw ConfigError("safety: delta_safe must be non-negative");
  if (!(gamma > 0.0)) throw ConfigError("safety: gamma must be positive");
  const int n = static_cast<int>(model.spheres.size());
  for (const auto& [i, j] : self_pairs) {
    if (i < 0 || j < 0 || i >= n || j >= n || i == j) throw ConfigError("safety: self-collision pair out of range");
  }
}

std::vector<std::pair<int, int>> SafetySpec::default_self_pairs(const RobotModel& model) {
  std::vector<std::pair<int, int>> pairs;
  const int n = static_cast<int>(model.spheres.size());
  for (int i = 0; i < n; ++i) {
    if (model.sphere_link(i) != 0) continue;
    for (int j = 0; j < n; ++j) {
      if (model.sphere_link(j) >= 2) pairs.emplace_back(i, j);
    }
  }
  return pairs;
}

BarrierValue barrier_value(const VoxelGrid& grid, const Kinematics& kin, int sphere, double delta_safe) {
  const auto& model = kin.model();
  BarrierValue out;
  out.gradient = VecX::Zero(model.dof());
  const Vec3 c = kin.sphere_center(sphere);
  const auto sample = trilinear_sample(grid, c);
  if (sample.clamped) {
    out.h = -delta_safe;
    out.clamped = true;
    return out;
  }
  out.h = sample.value - model.spheres[static_cast<size_t>(sphere)].radius - delta_safe;
  out.gradient = kin.sphere_jacobian(sphere).transpose() * sample.gradient;
  return out;
}

BarrierValue barrier_value(const VoxelGrid& grid, const RobotModel& model, const VecX& q, int sphere,
                           double delta_safe) {
  return barrier_value(grid, Kinematics(model, q), sphere, delta_safe);
}

std::vector<ConstraintRow> safety_rows(const VoxelGrid& grid, const RobotModel& model, const VecX& x_bar, int stage,
                                       const SafetySpec& spec) {
  const int n = model.dof();
  const VecX q_bar = x_bar.head(n);
  const Kinematics kin(model, q_bar);
  std::vector<ConstraintRow> rows;
  rows.reserve(model.spheres.size());
  for (int s = 0; s < static_cast<int>(model.spheres.size()); ++s) {
    const auto b = barrier_value(grid, kin, s, spec.delta_safe);
    ConstraintRow row;
    row.stage = stage;
    row.coeff_x = VecX::Zero(2 * n);
    row.coeff_u = VecX::Zero(n);
    row.value = b.h;
    if (spec.mode == SafetyMode::CBF) {
      row.coeff_x.tail(n) = b.gradient;
      row.lower = -spec.gamma * b.h;
    } else {
      row.coeff_x.head(n) = b.gradient;
      row.lower = -b.h + b.gradient.dot(q_bar);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

PairValue self_collision_value(const Kinematics& kin, int i, int j, double margin, const std::optional<Vec3>& previous) {
  const auto& model = kin.model();
  const Vec3 d = kin.sphere_center(i) - kin.sphere_center(j);
  const double dist = d.norm();
  PairValue out;
  if (dist > 1e-12) {
    out.direction = d / dist;
  } else {
    out.direction = previous.value_or(Vec3::UnitZ());
    out.fallback = true;
  }
  out.value = dist - model.spheres[static_cast<size_t>(i)].radius - model.spheres[static_cast<size_t>(j)].radius - margin;
  out.gradient = (kin.sphere_jacobian(i) - kin.sphere_jacobian(j)).transpose() * out.direction;
  return out;
}

std::vector<ConstraintRow> self_collision_rows(const RobotModel& model, const VecX& q, int stage,
                                               const std::vector<std::pair<int, int>>& pairs, double margin) {
  const int n = model.dof();
  const Kinematics kin(model, q);
  std::vector<ConstraintRow> rows;
  rows.reserve(pairs.size());
  for (const auto& [i, j] : pairs) {
    const auto pv = self_collision_value(kin, i, j, margin);
    ConstraintRow row;
    row.stage = stage;
    row.coeff_x = VecX::Zero(2 * n);
    row.coeff_u = VecX::Zero(n);
    row.coeff_x.head(n) = pv.gradient;
    row.lower = -pv.value + pv.gradient.dot(q);
    row.value = pv.value;
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace phtmpc
