#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "bayes_quadrature.hpp"
#include "numeric_oracles.hpp"
#include "phtmpc/mapping/consistency.hpp"
#include "phtmpc/mapping/edt.hpp"
#include "phtmpc/mapping/hungarian.hpp"
#include "phtmpc/mapping/local_edf.hpp"
#include "phtmpc/mapping/object_library.hpp"
#include "phtmpc/mapping/segmentation.hpp"
#include "phtmpc/mapping/snapshot.hpp"
#include "phtmpc/mapping/voxel_io.hpp"

using namespace phtmpc;

namespace {

BoxObject make_box(double x, double y, double s = 0.4) {
  BoxObject b;
  b.x = x;
  b.y = y;
  b.size = Vec3::Constant(s);
  return b;
}

ObservationSegment box_segment(const BoxObject& b) { return make_segment(oracle::box_surface_points(b, 0.05)); }

}  // namespace

// ---- consistency ----------------------------------------------------------

TEST(Consistency, MomentsMatchQuadrature) {
  ConsistencyConfig cfg;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int draw = 0; draw < 12; ++draw) {
    ConsistencyParams p{-0.3 + 0.6 * U(rng), 0.05 + 0.3 * U(rng), 1.0 + 20.0 * U(rng), 1.0 + 20.0 * U(rng)};
    const MeasurementPair m{-1.0 + 2.0 * U(rng), draw % 2};
    const auto cf = posterior_moments(p, m, cfg);
    const auto q = oracle::quadrature_moments({p.mu, p.sigma, p.alpha, p.beta}, m.delta, m.s, cfg.tau, cfg.delta_max, 801);
    EXPECT_NEAR(cf.mean_l, q.mean_l, 1e-3 * std::max(std::abs(q.mean_l), std::sqrt(q.var_l)));
    EXPECT_NEAR(cf.var_l, q.var_l, 1e-3 * q.var_l);
    EXPECT_NEAR(cf.mean_v, q.mean_v, 1e-3 * q.mean_v);
    EXPECT_NEAR(cf.mean_v2, q.mean_v2, 1e-3 * q.mean_v2);
    EXPECT_NEAR(cf.inlier_weight, q.inlier_weight, 1e-3);
  }
}

TEST(Consistency, EvidenceMovesExpectationMonotonically) {
  ConsistencyConfig cfg;
  ConsistencyParams p{0.0, 0.1, 3.0, 3.0};
  const double e0 = expected_consistency(p);
  EXPECT_GT(expected_consistency(bayes_update(p, {0.0, 1}, cfg).params), e0);
  EXPECT_LT(expected_consistency(bayes_update(p, {cfg.delta_max, 0}, cfg).params), e0);
  // Stronger disagreement never raises the consistency.
  double prev = 1.0;
  for (double d : {0.0, 0.05, 0.1, 0.2, 0.5, 1.0}) {
    const double e = expected_consistency(bayes_update(p, {d, 1}, cfg).params);
    EXPECT_LE(e, prev + 1e-12) << d;
    prev = e;
  }
}

TEST(Consistency, DefaultPriorDecaysBelowThresholdQuickly) {
  ConsistencyConfig cfg;
  for (double a : {1.0, 2.0, 5.0}) {
    ConsistencyParams p{0.0, 1.0 / 3.0, a, a};
    int k = 0;
    while (expected_consistency(p) >= 0.3 && k < 20) {
      p = bayes_update(p, {cfg.delta_max, 0}, cfg).params;
      ++k;
    }
    EXPECT_LE(k, 10) << a;
  }
}

TEST(Consistency, ProjectionStaysValidAndFlagsClamping) {
  ConsistencyConfig cfg;
  ConsistencyParams p{0.0, 0.2, 150.0, 1.0};
  BayesUpdate u;
  for (int i = 0; i < 50; ++i) {
    u = bayes_update(p, {0.0, 1}, cfg);
    p = u.params;
    ASSERT_TRUE(params_valid(p, cfg));
  }
  EXPECT_TRUE(u.clamped);
  EXPECT_TRUE(bayes_update(p, {3.0, 1}, cfg).delta_clamped);
}

// ---- distance transforms ---------------------------------------------------

TEST(Edt, MatchesBruteForce) {
  std::mt19937_64 rng(5);
  std::bernoulli_distribution occ(0.03);
  const Index3 dims{13, 9, 7};
  std::vector<std::uint8_t> mask(13 * 9 * 7);
  for (auto& m : mask) m = occ(rng);
  const auto d2 = squared_edt(mask, dims);
  VoxelGrid like(Vec3::Zero(), 1.0, dims);
  for (size_t i = 0; i < mask.size(); ++i) {
    const Index3 a = like.unravel(i);
    double best = std::numeric_limits<double>::infinity();
    for (size_t j = 0; j < mask.size(); ++j) {
      if (!mask[j]) continue;
      const Index3 b = like.unravel(j);
      best = std::min(best, double((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) +
                                   (a[2] - b[2]) * (a[2] - b[2])));
    }
    EXPECT_EQ(d2[i], best);
  }
  const auto none = squared_edt(std::vector<std::uint8_t>(mask.size(), 0), dims);
  EXPECT_TRUE(std::isinf(none[0]));
}

TEST(LocalEdf, MatchesBruteForceOnSmallGrid) {
  MapperConfig cfg;
  ObjectLibrary lib;
  lib.objects.push_back(make_object(1, box_segment(make_box(0.4, 0.5)), cfg, 0.0));
  lib.objects.push_back(make_object(2, box_segment(make_box(1.9, 1.2, 0.3)), cfg, 0.0));
  const Region region{Vec3(0.0, 0.0, 0.0), Vec3(1.55, 1.55, 1.55)};
  const auto edf = build_local_edf(lib, region, cfg.theta_zero, cfg.theta_cutoff, cfg.voxel_size);
  std::vector<Index3> keys;
  for (const auto& o : lib.objects) {
    const auto k = oracle::zero_band_keys(o, cfg.theta_zero);
    keys.insert(keys.end(), k.begin(), k.end());
  }
  const auto ref = oracle::brute_force_edf(keys, edf, cfg.theta_cutoff);
  for (size_t i = 0; i < edf.size(); ++i) ASSERT_NEAR(edf[i], ref[i], 1e-12) << i;
  const auto empty = build_local_edf(ObjectLibrary{}, region, cfg.theta_zero, cfg.theta_cutoff, cfg.voxel_size);
  for (double v : empty.values()) EXPECT_EQ(v, cfg.theta_cutoff);
  EXPECT_THROW(build_local_edf(lib, Region{Vec3::Ones(), Vec3::Ones()}, 0.1, 1.5, 0.1), std::invalid_argument);
}

// ---- segmentation and association -----------------------------------------

TEST(Segmentation, DropsGroundAndSplitsClusters) {
  std::vector<Vec3> pts;
  for (int i = 0; i < 40; ++i) pts.emplace_back(0.05 * i, 0.0, 0.01);  // ground
  const auto a = oracle::box_surface_points(make_box(1.0, 1.0, 0.3), 0.05);
  const auto b = oracle::box_surface_points(make_box(3.0, 1.0, 0.3), 0.05);
  pts.insert(pts.end(), b.begin(), b.end());
  pts.insert(pts.end(), a.begin(), a.end());
  pts.emplace_back(5.0, 5.0, 1.0);  // lone outlier
  const auto segs = segment_cloud(pts, SegmentationConfig{});
  ASSERT_EQ(segs.size(), 2u);
  // Order follows the first input index: box b came first.
  EXPECT_NEAR(segs[0].centroid.x(), 3.0, 0.05);
  EXPECT_NEAR(segs[1].centroid.x(), 1.0, 0.05);
  for (const auto& s : segs)
    for (const auto& p : s.points) EXPECT_GT(p.z(), SegmentationConfig{}.ground_height);
}

TEST(Hungarian, MatchesPermutationOracle) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> U(0.0, 10.0);
  for (int trial = 0; trial < 40; ++trial) {
    const int rows = 1 + trial % 5, cols = 1 + (trial / 5) % 5;
    MatX c(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) c(i, j) = U(rng);
    const auto a = hungarian(c);
    double got = 0.0;
    std::vector<int> used;
    for (int i = 0; i < rows; ++i) {
      if (a[static_cast<size_t>(i)] < 0) continue;
      got += c(i, a[static_cast<size_t>(i)]);
      used.push_back(a[static_cast<size_t>(i)]);
    }
    std::sort(used.begin(), used.end());
    EXPECT_EQ(std::unique(used.begin(), used.end()), used.end());
    EXPECT_EQ(static_cast<int>(used.size()), std::min(rows, cols));
    // Enumerate every injection of the smaller side.
    std::vector<int> perm(static_cast<size_t>(std::max(rows, cols)));
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
      double s = 0.0;
      if (rows <= cols)
        for (int i = 0; i < rows; ++i) s += c(i, perm[static_cast<size_t>(i)]);
      else
        for (int j = 0; j < cols; ++j) s += c(perm[static_cast<size_t>(j)], j);
      best = std::min(best, s);
    } while (std::next_permutation(perm.begin(), perm.end()));
    EXPECT_NEAR(got, best, 1e-9) << rows << "x" << cols;
  }
}

TEST(Association, GatesByCentroidDistance) {
  MapperConfig cfg;
  ObjectLibrary lib;
  lib.objects.push_back(make_object(1, box_segment(make_box(1.0, 0.0)), cfg, 0.0));
  lib.objects.push_back(make_object(2, box_segment(make_box(3.0, 0.0)), cfg, 0.0));
  const std::vector<ObservationSegment> segs{box_segment(make_box(3.1, 0.0)), box_segment(make_box(6.0, 0.0))};
  const auto a = associate(segs, lib, cfg.gate, {});
  ASSERT_EQ(a.pairs.size(), 1u);
  EXPECT_EQ(a.pairs[0], std::make_pair(0, 1));
  EXPECT_EQ(a.unmatched_segments, std::vector<int>{1});
  EXPECT_TRUE(a.unobserved_expected.empty());  // no frames, nothing expected
}

// ---- object entries --------------------------------------------------------

TEST(ObjectEntry, GeometricConsistencyNearZeroForSameShape) {
  MapperConfig cfg;
  const BoxObject b = make_box(1.0, 1.0);
  const auto obj = make_object(1, box_segment(b), cfg, 0.0);
  const auto same = geometric_consistency(obj, box_segment(b), cfg);
  ASSERT_TRUE(same.has_value());
  EXPECT_LT(*same, 0.5 * cfg.voxel_size);
  const auto shifted = geometric_consistency(obj, box_segment(make_box(1.3, 1.0)), cfg);
  ASSERT_TRUE(shifted.has_value());
  EXPECT_GT(*shifted, *same + 0.05);
  EXPECT_FALSE(geometric_consistency(obj, box_segment(make_box(9.0, 1.0)), cfg).has_value());
}

TEST(ObjectEntry, IntegrateIsIdempotentAndGrows) {
  MapperConfig cfg;
  const auto seg = box_segment(make_box(1.0, 1.0));
  const auto obj = make_object(1, seg, cfg, 0.0);
  const auto again = integrate_segment(obj, seg, cfg);
  EXPECT_EQ(again.occupied, obj.occupied);
  EXPECT_EQ(again.submap.values(), obj.submap.values());
  const auto grown = integrate_segment(obj, box_segment(make_box(1.6, 1.0)), cfg);
  EXPECT_GT(grown.occupied_count(), obj.occupied_count());
  // The distance field is exact: zero on occupied voxels.
  for (size_t i = 0; i < grown.occupied.size(); ++i)
    if (grown.occupied[i]) EXPECT_EQ(grown.submap[i], 0.0);
}

TEST(ProcessFrame, CreatesObservesAndRemoves) {
  MapperConfig cfg;
  cfg.semantic_label = 1;  // agreeing label so a matching observation raises E[v]
  ObjectLibrary lib;
  const BoxObject b = make_box(2.0, 0.0);
  auto ev = process_frame(lib, {box_segment(b)}, {}, cfg, 0.0);
  ASSERT_EQ(ev.size(), 1u);
  EXPECT_EQ(ev[0].kind, ConsistencyEvent::Kind::Created);
  ASSERT_EQ(lib.objects.size(), 1u);
  const double e0 = expected_consistency(lib.objects[0].params);
  ev = process_frame(lib, {box_segment(b)}, {}, cfg, 0.2);
  ASSERT_EQ(ev.size(), 1u);
  EXPECT_EQ(ev[0].kind, ConsistencyEvent::Kind::Observed);
  EXPECT_GT(expected_consistency(lib.objects[0].params), e0);

  // The box vanishes while in full view.
  DepthCameraSpec cam;
  std::mt19937_64 rng(1);
  auto frame = render_depth(WorldState{}, Pose3{Vec3(0, 0, 0.3), Mat3::Identity()}, cam, rng);
  bool removed = false;
  for (int k = 0; k < 10 && !removed; ++k) {
    for (const auto& e : process_frame(lib, {}, {frame}, cfg, 0.4 + 0.2 * k)) {
      removed = removed || e.kind == ConsistencyEvent::Kind::Removed;
    }
  }
  EXPECT_TRUE(removed);
  EXPECT_TRUE(lib.objects.empty());
}

TEST(ProcessFrame, OccludedObjectIsLeftAlone) {
  MapperConfig cfg;
  ObjectLibrary lib;
  process_frame(lib, {box_segment(make_box(2.0, 0.0))}, {}, cfg, 0.0);
  const auto before = lib.objects[0].params;
  // A wall in front hides the box completely.
  WorldState w;
  BoxObject wall = make_box(1.0, 0.0);
  wall.size = Vec3(0.1, 4.0, 2.0);
  w.boxes = {wall};
  DepthCameraSpec cam;
  std::mt19937_64 rng(1);
  auto frame = render_depth(w, Pose3{Vec3(0, 0, 0.3), Mat3::Identity()}, cam, rng);
  const auto ev = process_frame(lib, {}, {frame}, cfg, 0.2);
  EXPECT_TRUE(ev.empty());
  EXPECT_EQ(lib.objects[0].params.alpha, before.alpha);
  EXPECT_EQ(lib.objects[0].params.beta, before.beta);
}

TEST(VoxelBaseline, KeepsEverythingForever) {
  MapperConfig cfg;
  VoxelBaselineMap map(cfg);
  EXPECT_TRUE(map.empty());
  map.update({box_segment(make_box(1.0, 0.0))}, 0.0);
  const size_t n = map.cumulative().occupied_count();
  map.update({box_segment(make_box(3.0, 0.0))}, 1.0);
  EXPECT_GT(map.cumulative().occupied_count(), n);
  map.update({}, 2.0);
  EXPECT_EQ(map.as_library().objects.size(), 1u);
}

// ---- persistence -----------------------------------------------------------

TEST(VoxelIo, RoundTripIsBitExact) {
  VoxelGrid g(Vec3(-1.25, 0.5, 3.0), 0.05, {5, 4, 3});
  std::mt19937_64 rng(2);
  std::normal_distribution<double> N(0.0, 1.0);
  for (auto& v : g.values()) v = N(rng);
  g[3] = std::numeric_limits<double>::infinity();
  std::stringstream ss;
  write_voxel_grid(ss, g);
  EXPECT_EQ(ss.str().size(), 4u + 4u + 12u + 24u + 8u + 8u * g.size());
  const auto r = read_voxel_grid(ss);
  EXPECT_EQ(r.dims(), g.dims());
  EXPECT_EQ(r.origin(), g.origin());
  EXPECT_EQ(r.voxel_size(), g.voxel_size());
  EXPECT_EQ(r.values(), g.values());
}

TEST(VoxelIo, RejectsCorruptInput) {
  std::stringstream bad_magic("XXXX");
  EXPECT_THROW(read_voxel_grid(bad_magic), std::runtime_error);
  VoxelGrid g(Vec3::Zero(), 0.1, {2, 2, 2}, 1.0);
  std::stringstream ss;
  write_voxel_grid(ss, g);
  std::string s = ss.str();
  std::stringstream truncated(s.substr(0, s.size() - 5));
  EXPECT_THROW(read_voxel_grid(truncated), std::runtime_error);
}

TEST(Snapshot, HashTracksContentAndChannelKeepsOldValues) {
  MapperConfig cfg;
  auto lib = std::make_shared<ObjectLibrary>();
  lib->objects.push_back(make_object(1, box_segment(make_box(0.5, 0.5)), cfg, 0.0));
  auto a = std::make_shared<MapSnapshot>();
  a->version = 1;
  a->library = lib;
  a->edf = build_local_edf(*lib, Region{Vec3::Zero(), Vec3::Constant(1.0)}, 0.1, 1.5, 0.1);
  auto b = std::make_shared<MapSnapshot>(*a);
  EXPECT_EQ(a->content_hash(), b->content_hash());
  b->edf[0] += 1e-9;
  EXPECT_NE(a->content_hash(), b->content_hash());

  LatestValue<MapSnapshot> chan;
  EXPECT_EQ(chan.latest(), nullptr);
  chan.publish(a);
  const auto held = chan.latest();
  const auto h = held->content_hash();
  chan.publish(b);
  EXPECT_EQ(held->content_hash(), h);
  EXPECT_EQ(chan.latest(), b);
}
