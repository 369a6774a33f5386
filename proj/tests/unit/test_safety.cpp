#include <gtest/gtest.h>

#include <random>

#include "numeric_oracles.hpp"
#include "phtmpc/errors.hpp"
#include "phtmpc/safety/constraints.hpp"

using namespace phtmpc;

namespace {

// Affine distance field: trilinear interpolation reproduces it exactly,
// so finite differences agree everywhere inside the grid.
VoxelGrid affine_grid(const Vec3& a, double b) {
  VoxelGrid g(Vec3(-4.0, -4.0, -0.5), 0.1, {81, 81, 31});
  for (size_t i = 0; i < g.size(); ++i) {
    const Index3 k = g.unravel(i);
    g[i] = a.dot(g.node_position(k[0], k[1], k[2])) + b;
  }
  return g;
}

}  // namespace

TEST(Barrier, GradientMatchesFiniteDifference) {
  const auto m = RobotModel::reference();
  const auto g = affine_grid(Vec3(0.3, -0.2, 0.5), 2.0);
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const VecX q = oracle::random_config(rng, m, 1.0);
    for (int s = 0; s < static_cast<int>(m.spheres.size()); ++s) {
      const auto b = barrier_value(g, m, q, s, 0.1);
      ASSERT_FALSE(b.clamped);
      const VecX fd = oracle::central_gradient([&](const VecX& x) { return barrier_value(g, m, x, s, 0.1).h; }, q);
      EXPECT_LT(oracle::rel_err(b.gradient, fd), 1e-6) << s;
      const Vec3 c = Kinematics(m, q).sphere_center(s);
      EXPECT_NEAR(b.h, Vec3(0.3, -0.2, 0.5).dot(c) + 2.0 - m.spheres[static_cast<size_t>(s)].radius - 0.1, 1e-12);
    }
  }
}

TEST(Barrier, OutsideGridIsConservative) {
  const auto m = RobotModel::reference();
  const VoxelGrid g(Vec3(10.0, 10.0, 0.0), 0.1, {4, 4, 4}, 5.0);
  const auto b = barrier_value(g, m, m.home, 0, 0.2);
  EXPECT_TRUE(b.clamped);
  EXPECT_DOUBLE_EQ(b.h, -0.2);
  EXPECT_EQ(b.gradient.norm(), 0.0);
}

TEST(SafetyRows, CbfAndEdfForms) {
  const auto m = RobotModel::reference();
  const int n = m.dof();
  const auto g = affine_grid(Vec3(1.0, 0.0, 0.0), 3.0);
  VecX x(2 * n);
  x.head(n) = m.home;
  x.tail(n) = VecX::LinSpaced(n, -0.1, 0.1);
  SafetySpec spec;
  spec.gamma = 2.5;
  const auto cbf = safety_rows(g, m, x, 3, spec);
  ASSERT_EQ(cbf.size(), m.spheres.size());
  for (size_t s = 0; s < cbf.size(); ++s) {
    const auto b = barrier_value(g, m, m.home, static_cast<int>(s), spec.delta_safe);
    EXPECT_EQ(cbf[s].stage, 3);
    EXPECT_EQ(cbf[s].coeff_x.head(n).norm(), 0.0);
    EXPECT_EQ(cbf[s].coeff_x.tail(n), b.gradient);
    EXPECT_DOUBLE_EQ(cbf[s].lower, -spec.gamma * b.h);
    EXPECT_EQ(cbf[s].slack, SlackClass::SoftSafety);
  }
  spec.mode = SafetyMode::EDF;
  const auto edf = safety_rows(g, m, x, 0, spec);
  for (size_t s = 0; s < edf.size(); ++s) {
    // Linearised h(q) >= 0 written as dh.q >= dh.q_bar - h(q_bar).
    EXPECT_EQ(edf[s].coeff_x.tail(n).norm(), 0.0);
    EXPECT_NEAR(edf[s].coeff_x.head(n).dot(m.home) - edf[s].lower, edf[s].value, 1e-12);
  }
}

TEST(SelfCollision, GradientMatchesFiniteDifference) {
  const auto m = RobotModel::reference();
  const auto pairs = SafetySpec::default_self_pairs(m);
  ASSERT_FALSE(pairs.empty());
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const VecX q = oracle::random_config(rng, m, 1.0);
    for (const auto& [i, j] : pairs) {
      const auto pv = self_collision_value(Kinematics(m, q), i, j, 0.02);
      const VecX fd = oracle::central_gradient(
          [&](const VecX& x) { return self_collision_value(Kinematics(m, x), i, j, 0.02).value; }, q);
      EXPECT_LT(oracle::rel_err(pv.gradient, fd), 1e-6);
    }
  }
  const auto rows = self_collision_rows(m, m.home, 1, pairs, 0.02);
  ASSERT_EQ(rows.size(), pairs.size());
  for (const auto& r : rows) EXPECT_NEAR(r.coeff_x.head(m.dof()).dot(m.home) - r.lower, r.value, 1e-12);
}

TEST(SelfCollision, CoincidentCentresUseFallbackDirection) {
  auto m = RobotModel::reference();
  m.spheres[1] = m.spheres[0];
  const Kinematics kin(m, m.home);
  const auto a = self_collision_value(kin, 0, 1, 0.0);
  EXPECT_TRUE(a.fallback);
  EXPECT_EQ(a.direction, Vec3::UnitZ());
  const auto b = self_collision_value(kin, 0, 1, 0.0, Vec3::UnitX());
  EXPECT_EQ(b.direction, Vec3::UnitX());
  EXPECT_NEAR(a.value, -2.0 * m.spheres[0].radius, 1e-12);
}

TEST(SafetySpec, ValidateRejectsBadValues) {
  const auto m = RobotModel::reference();
  SafetySpec s;
  EXPECT_NO_THROW(s.validate(m));
  s.gamma = 0.0;
  EXPECT_THROW(s.validate(m), ConfigError);
  s.gamma = 1.0;
  s.delta_safe = -0.1;
  EXPECT_THROW(s.validate(m), ConfigError);
  s.delta_safe = 0.1;
  s.self_pairs = {{0, 0}};
  EXPECT_THROW(s.validate(m), ConfigError);
  s.self_pairs = {{0, static_cast<int>(m.spheres.size())}};
  EXPECT_THROW(s.validate(m), ConfigError);
}
