#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "phtmpc/errors.hpp"
#include "phtmpc/sim/depth_camera.hpp"
#include "phtmpc/sim/ground_truth.hpp"
#include "phtmpc/sim/integrator.hpp"
#include "phtmpc/sim/world.hpp"

using namespace phtmpc;

namespace {

BoxObject box(int id, double x, double y, double yaw = 0.0, Vec3 size = Vec3::Constant(0.6), int level = 0) {
  BoxObject b;
  b.id = id;
  b.x = x;
  b.y = y;
  b.yaw = yaw;
  b.size = size;
  b.level = level;
  return b;
}

bool inside(const BoxObject& b, const Vec3& p) { return box_signed_distance(b, p) <= 0.0; }

}  // namespace

TEST(World, RayBoxAgreesWithMarching) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const BoxObject b = box(1, 0.3, -0.2, 0.7, Vec3(0.5, 0.8, 0.4), 1);
  int hits = 0;
  for (int n = 0; n < 300; ++n) {
    const Vec3 o(2.0 * U(rng), 2.0 * U(rng), 0.6 + U(rng));
    if (inside(b, o)) continue;
    const Vec3 target = b.center() + 0.5 * Vec3(U(rng), U(rng), U(rng));
    const Vec3 d = (target - o).normalized();
    const auto t = intersect_ray_box(o, d, b);
    // March the ray and find the first inside sample.
    double first = -1.0;
    for (double s = 0.0; s < 6.0; s += 1e-4) {
      if (inside(b, o + s * d)) {
        first = s;
        break;
      }
    }
    ASSERT_EQ(t.has_value(), first >= 0.0);
    if (t) {
      ++hits;
      EXPECT_NEAR(*t, first, 2e-4);
    }
  }
  EXPECT_GT(hits, 100);
  EXPECT_FALSE(intersect_ray_box(Vec3(5, 0, 0.3), Vec3(1, 0, 0), box(1, 0, 0)).has_value());
  EXPECT_DOUBLE_EQ(*intersect_ray_box(Vec3(0, 0, 0.3), Vec3(1, 0, 0), box(1, 0, 0)), 0.0);
}

TEST(World, SignedDistanceSignAndGradient) {
  const BoxObject b = box(1, 1.0, 2.0, 0.4);
  EXPECT_NEAR(box_signed_distance(b, b.center()), -0.3, 1e-12);
  Vec3 g;
  const Vec3 p = b.center() + Vec3(std::cos(0.4), std::sin(0.4), 0.0) * 0.5;
  EXPECT_NEAR(box_signed_distance(b, p, &g), 0.2, 1e-12);
  EXPECT_LT((g - Vec3(std::cos(0.4), std::sin(0.4), 0.0)).norm(), 1e-12);
}

TEST(World, ScriptedChangesApplyInOrder) {
  WorldState w;
  w.boxes = {box(1, 0, 0), box(2, 2, 0)};
  std::vector<ScriptedChange> script(3);
  script[0].trigger.time = 1.0;
  script[0].kind = ChangeKind::Remove;
  script[0].id = 1;
  script[1].trigger.event = "subtask:0";
  script[1].kind = ChangeKind::Relocate;
  script[1].id = 2;
  script[1].x = 5.0;
  script[2].trigger.time = 2.0;
  script[2].kind = ChangeKind::Insert;
  script[2].box = box(3, 1, 1);
  EXPECT_NO_THROW(validate_script(w, script));

  auto w1 = apply_scripted_changes(w, script, 0.5);
  EXPECT_EQ(w1.applied_changes, 0u);
  w1 = apply_scripted_changes(w1, script, 3.0);
  // The event trigger blocks the later time trigger.
  EXPECT_EQ(w1.applied_changes, 1u);
  EXPECT_EQ(w1.find(1), nullptr);
  w1 = apply_scripted_changes(w1, script, 3.1, {"subtask:0"});
  EXPECT_EQ(w1.applied_changes, 3u);
  EXPECT_DOUBLE_EQ(w1.find(2)->x, 5.0);
  EXPECT_NE(w1.find(3), nullptr);
}

TEST(World, ScriptValidationErrors) {
  WorldState w;
  w.boxes = {box(1, 0, 0)};
  ScriptedChange c;
  c.trigger.time = 1.0;
  c.kind = ChangeKind::Remove;
  c.id = 7;
  EXPECT_THROW(validate_script(w, {c}), ConfigError);
  c.id = 1;
  ScriptedChange again = c;
  EXPECT_THROW(validate_script(w, {c, again}), ConfigError);
  ScriptedChange early = c;
  early.trigger.time = 0.5;
  early.kind = ChangeKind::Relocate;
  EXPECT_THROW(validate_script(w, {c, early}), ConfigError);
  WorldState dup;
  dup.boxes = {box(1, 0, 0), box(1, 2, 0)};
  EXPECT_THROW(validate_script(dup, {}), ConfigError);
}

TEST(Camera, RangeCutoffAndWallDepth) {
  DepthCameraSpec spec;
  spec.vfov = 0.1;
  spec.hfov = 0.4;
  spec.cols = 9;
  spec.rows = 3;
  std::mt19937_64 rng(0);
  const Pose3 cam{Vec3(0, 0, 0.3), Mat3::Identity()};

  WorldState far;
  far.boxes = {box(1, 4.0, 0.0, 0.0, Vec3(0.2, 4.0, 2.0))};
  const auto f1 = render_depth(far, cam, spec, rng);
  for (size_t i = 0; i < f1.range.size(); ++i) {
    EXPECT_FALSE(f1.hit[i]);
    EXPECT_DOUBLE_EQ(f1.range[i], spec.max_range);
  }
  EXPECT_TRUE(f1.hit_points().empty());

  WorldState near;
  near.boxes = {box(1, 2.1, 0.0, 0.0, Vec3(0.2, 4.0, 2.0))};
  const auto f2 = render_depth(near, cam, spec, rng);
  for (int r = 0; r < spec.rows; ++r)
    for (int c = 0; c < spec.cols; ++c) {
      const size_t i = f2.ray_index(r, c);
      ASSERT_TRUE(f2.hit[i]);
      EXPECT_NEAR(f2.range[i] * spec.ray_direction(r, c).x(), 2.0, 1e-12);
    }
}

TEST(Camera, PixelOfInvertsRayDirection) {
  DepthCameraSpec spec;
  for (int r = 0; r < spec.rows; ++r)
    for (int c = 0; c < spec.cols; ++c) {
      const auto px = spec.pixel_of(spec.ray_direction(r, c));
      ASSERT_TRUE(px.has_value());
      EXPECT_EQ(px->first, r);
      EXPECT_EQ(px->second, c);
    }
  EXPECT_FALSE(spec.pixel_of(Vec3(-1, 0, 0)).has_value());
  spec.hfov = 4.0;
  EXPECT_THROW(spec.validate(), ConfigError);
}

TEST(Camera, NoiseIsSeeded) {
  DepthCameraSpec spec;
  spec.noise_sigma = 0.01;
  WorldState w;
  w.boxes = {box(1, 2.0, 0.0, 0.0, Vec3(0.2, 4.0, 2.0))};
  std::mt19937_64 a(42), b(42);
  EXPECT_EQ(render_depth(w, Pose3::identity(), spec, a).range, render_depth(w, Pose3::identity(), spec, b).range);
}

TEST(Integrator, ExactDoubleIntegratorAndClamp) {
  RobotState s{VecX::Zero(2), VecX::Zero(2)};
  s.q << 1.0, -1.0;
  s.v << 0.5, 0.0;
  VecX u(2);
  u << 0.2, -1.0;
  const VecX vmax = VecX::Constant(2, 10.0);
  const auto r = integrate_robot(s, u, 0.5, vmax);
  EXPECT_NEAR(r.state.q(0), 1.0 + 0.5 * 0.5 + 0.5 * 0.2 * 0.25, 1e-15);
  EXPECT_NEAR(r.state.q(1), -1.0 - 0.5 * 0.25, 1e-15);
  EXPECT_NEAR(r.state.v(0), 0.6, 1e-15);
  EXPECT_FALSE(r.clamped);
  const auto c = integrate_robot(s, u, 0.5, VecX::Constant(2, 0.3));
  EXPECT_TRUE(c.clamped);
  EXPECT_DOUBLE_EQ(c.state.v(1), -0.3);
  EXPECT_DOUBLE_EQ(c.state.v(0), 0.3);
  EXPECT_THROW(integrate_robot(s, u, 0.0, vmax), std::invalid_argument);
  u(0) = NAN;
  EXPECT_THROW(integrate_robot(s, u, 0.1, vmax), std::invalid_argument);
}

TEST(GroundTruth, EdfMatchesPointDistance) {
  WorldState w;
  w.boxes = {box(1, 0.5, 0.5, 0.3), box(2, 1.6, 0.4, -0.2, Vec3(0.4, 0.4, 0.4), 1)};
  const auto g = ground_truth_edf(w, Region{Vec3(-0.5, -0.5, 0.0), Vec3(2.5, 1.5, 1.5)}, 0.1);
  EXPECT_NEAR(g.origin().x() / 0.1, std::round(g.origin().x() / 0.1), 1e-9);
  for (int k = 0; k < g.dims()[2]; k += 3)
    for (int j = 0; j < g.dims()[1]; j += 2)
      for (int i = 0; i < g.dims()[0]; i += 2) {
        const Vec3 p = g.node_position(i, j, k);
        const double ref = std::max(0.0, std::min(box_signed_distance(w.boxes[0], p), box_signed_distance(w.boxes[1], p)));
        EXPECT_NEAR(g.at(i, j, k), ref, 1e-12);
      }
  const auto empty = ground_truth_edf(WorldState{}, Region{}, 0.25, 7.0);
  for (double v : empty.values()) EXPECT_EQ(v, 7.0);
}

TEST(GroundTruth, ClearanceIsMinimumOverSpheres) {
  const auto m = RobotModel::reference();
  WorldState w;
  w.boxes = {box(1, 1.2, 0.0)};
  VecX q = m.home;
  const auto c = whole_body_clearance(w, m, q);
  const Kinematics kin(m, q);
  double ref = 1e9;
  for (int s = 0; s < static_cast<int>(m.spheres.size()); ++s) {
    ref = std::min(ref, box_signed_distance(w.boxes[0], kin.sphere_center(s)) - m.spheres[static_cast<size_t>(s)].radius);
  }
  EXPECT_NEAR(c.value, ref, 1e-12);
  q(0) = 1.2;
  EXPECT_LT(whole_body_clearance(w, m, q).value, 0.0);
}
