#include "phtmpc/mapping/object_library.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "phtmpc/errors.hpp"
#include "phtmpc/mapping/edt.hpp"
#include "phtmpc/mapping/hungarian.hpp"

namespace phtmpc {

Index3 lattice_index(const Vec3& p, double h) {
  return {static_cast<int>(std::lround(p.x() / h)), static_cast<int>(std::lround(p.y() / h)),
          static_cast<int>(std::lround(p.z() / h))};
}

size_t ObjectEntry::occupied_count() const {
  return static_cast<size_t>(std::count(occupied.begin(), occupied.end(), std::uint8_t{1}));
}

std::vector<Vec3> ObjectEntry::occupied_points() const {
  std::vector<Vec3> out;
  for (size_t i = 0; i < occupied.size(); ++i) {
    if (!occupied[i]) continue;
    const Index3 c = submap.unravel(i);
    out.push_back(submap.node_position(c[0], c[1], c[2]));
  }
  return out;
}

const ObjectEntry* ObjectLibrary::find(int id) const {
  for (const auto& o : objects) {
    if (o.id == id) return &o;
  }
  return nullptr;
}

void MapperConfig::validate() const {
  if (!(voxel_size > 0.0)) throw ConfigError("mapper: voxel_size must be positive");
  if (!(consistency.tau > 0.0) || !(consistency.delta_max > 0.0)) {
    throw ConfigError("mapper: tau and delta_max must be positive");
  }
  if (!(consistency.param_floor > 0.0) || consistency.param_ceil <= consistency.param_floor) {
    throw ConfigError("mapper: need 0 < param_floor < param_ceil");
  }
  if (!(theta_change > 0.0 && theta_change < 1.0)) throw ConfigError("mapper: theta_change must lie in (0, 1)");
  if (!(theta_cutoff > 0.0) || theta_zero < 0.0) throw ConfigError("mapper: invalid EDF thresholds");
  if (semantic_label != 0 && semantic_label != 1) throw ConfigError("mapper: semantic label must be 0 or 1");
  if (segmentation.min_points < 1 || !(segmentation.cluster_radius > 0.0)) {
    throw ConfigError("mapper: invalid segmentation parameters");
  }
  if (submap_padding < 1) throw ConfigError("mapper: submap padding must be at least one voxel");
}

bool in_view(const DepthFrame& frame, const Vec3& p, double* depth, size_t* ray) {
  const Vec3 local = frame.camera_pose.inverse().transform(p);
  const double d = local.norm();
  if (d < 1e-9 || d > frame.spec.max_range) return false;
  const auto px = frame.spec.pixel_of(local);
  if (!px) return false;
  if (depth) *depth = d;
  if (ray) *ray = frame.ray_index(px->first, px->second);
  return true;
}

namespace {

bool any_voxel_in_view(const ObjectEntry& obj, const std::vector<DepthFrame>& frames) {
  for (const auto& p : obj.occupied_points()) {
    for (const auto& f : frames) {
      if (in_view(f, p)) return true;
    }
  }
  return false;
}

// Rebuilds the submap over [lo, hi] (lattice indices, inclusive) from a key list.
ObjectEntry rebuild(const ObjectEntry& base, const std::vector<Index3>& keys, const Index3& lo, const Index3& hi,
                    double h) {
  ObjectEntry out = base;
  const Index3 dims{hi[0] - lo[0] + 1, hi[1] - lo[1] + 1, hi[2] - lo[2] + 1};
  out.submap = VoxelGrid(Vec3(lo[0] * h, lo[1] * h, lo[2] * h), h, dims, 0.0);
  out.occupied.assign(out.submap.size(), 0);
  Vec3 sum = Vec3::Zero();
  size_t count = 0;
  for (const auto& k : keys) {
    const size_t idx = out.submap.linear(k[0] - lo[0], k[1] - lo[1], k[2] - lo[2]);
    if (!out.occupied[idx]) {
      out.occupied[idx] = 1;
      sum += Vec3(k[0] * h, k[1] * h, k[2] * h);
      ++count;
    }
  }
  distance_field(out.occupied, out.submap, 0.0);
  if (count > 0) out.anchor = sum / static_cast<double>(count);
  return out;
}

void key_bounds(const std::vector<Index3>& keys, Index3& lo, Index3& hi) {
  lo = {std::numeric_limits<int>::max(), std::numeric_limits<int>::max(), std::numeric_limits<int>::max()};
  hi = {std::numeric_limits<int>::min(), std::numeric_limits<int>::min(), std::numeric_limits<int>::min()};
  for (const auto& k : keys) {
    for (size_t a = 0; a < 3; ++a) {
      lo[a] = std::min(lo[a], k[a]);
      hi[a] = std::max(hi[a], k[a]);
    }
  }
}

std::vector<Index3> segment_keys(const ObservationSegment& seg, double h) {
  std::vector<Index3> keys;
  keys.reserve(seg.points.size());
  for (const auto& p : seg.points) keys.push_back(lattice_index(p, h));
  return keys;
}

}  // namespace

Association associate(const std::vector<ObservationSegment>& segments, const ObjectLibrary& library, double gate,
                      const std::vector<DepthFrame>& frames) {
  Association out;
  const int ns = static_cast<int>(segments.size());
  const int no = static_cast<int>(library.objects.size());
  std::vector<char> object_matched(static_cast<size_t>(no), 0);
  if (ns > 0 && no > 0) {
    MatX cost(ns, no);
    constexpr double kBlocked = 1e6;
    for (int s = 0; s < ns; ++s) {
      for (int o = 0; o < no; ++o) {
        const double d = (segments[static_cast<size_t>(s)].centroid - library.objects[static_cast<size_t>(o)].anchor).norm();
        cost(s, o) = d <= gate ? d : kBlocked;
      }
    }
    const auto assign = hungarian(cost);
    for (int s = 0; s < ns; ++s) {
      const int o = assign[static_cast<size_t>(s)];
      if (o >= 0 && cost(s, o) <= gate) {
        out.pairs.emplace_back(s, o);
        object_matched[static_cast<size_t>(o)] = 1;
      } else {
        out.unmatched_segments.push_back(s);
      }
    }
  } else {
    for (int s = 0; s < ns; ++s) out.unmatched_segments.push_back(s);
  }
  for (int o = 0; o < no; ++o) {
    if (!object_matched[static_cast<size_t>(o)] && any_voxel_in_view(library.objects[static_cast<size_t>(o)], frames)) {
      out.unobserved_expected.push_back(o);
    }
  }
  return out;
}

std::optional<double> geometric_consistency(const ObjectEntry& object, const ObservationSegment& segment,
                                            const MapperConfig& cfg) {
  if (segment.points.empty() || object.submap.empty()) return std::nullopt;
  const Vec3 lo = object.submap.origin();
  const Vec3 hi = object.submap.max_corner();
  size_t inside = 0;
  double sum = 0.0;
  for (const auto& p : segment.points) {
    const Vec3 c = p.cwiseMax(lo).cwiseMin(hi);
    const double outside = (p - c).norm();
    if (outside == 0.0) ++inside;
    sum += trilinear_sample(object.submap, c).value + outside;
  }
  const double n = static_cast<double>(segment.points.size());
  if (static_cast<double>(inside) / n < cfg.f_min) return std::nullopt;
  return std::clamp(sum / n, -cfg.consistency.delta_max, cfg.consistency.delta_max);
}

ObjectEntry make_object(int id, const ObservationSegment& segment, const MapperConfig& cfg, double time) {
  const double h = cfg.voxel_size;
  const auto keys = segment_keys(segment, h);
  Index3 lo, hi;
  key_bounds(keys, lo, hi);
  for (size_t a = 0; a < 3; ++a) {
    lo[a] -= cfg.submap_padding;
    hi[a] += cfg.submap_padding;
  }
  ObjectEntry base;
  base.id = id;
  base.params = cfg.prior;
  base.observations = 1;
  base.last_seen = time;
  return rebuild(base, keys, lo, hi, h);
}

ObjectEntry integrate_segment(const ObjectEntry& object, const ObservationSegment& segment, const MapperConfig& cfg) {
  const double h = object.submap.voxel_size();
  const Index3 origin = lattice_index(object.submap.origin(), h);
  std::vector<Index3> keys;
  for (size_t i = 0; i < object.occupied.size(); ++i) {
    if (!object.occupied[i]) continue;
    const Index3 c = object.submap.unravel(i);
    keys.push_back({origin[0] + c[0], origin[1] + c[1], origin[2] + c[2]});
  }
  bool added = false;
  for (const auto& k : segment_keys(segment, h)) {
    const int i = k[0] - origin[0], j = k[1] - origin[1], l = k[2] - origin[2];
    if (!object.submap.in_range(i, j, l) || !object.occupied[object.submap.linear(i, j, l)]) added = true;
    keys.push_back(k);
  }
  if (!added) return object;

  Index3 lo, hi;
  key_bounds(keys, lo, hi);
  const auto& d = object.submap.dims();
  for (size_t a = 0; a < 3; ++a) {
    lo[a] = std::min(lo[a] - cfg.submap_padding, origin[a]);
    hi[a] = std::max(hi[a] + cfg.submap_padding, origin[a] + d[a] - 1);
  }
  return rebuild(object, keys, lo, hi, h);
}

double free_space_coverage(const ObjectEntry& object, const std::vector<DepthFrame>& frames,
                           const MapperConfig& cfg) {
  const auto pts = object.occupied_points();
  if (pts.empty()) return 0.0;
  size_t free_count = 0;
  for (const auto& p : pts) {
    for (const auto& f : frames) {
      double depth = 0.0;
      size_t ray = 0;
      if (!in_view(f, p, &depth, &ray)) continue;
      if (f.range[ray] > depth + cfg.free_margin) {
        ++free_count;
        break;
      }
    }
  }
  return static_cast<double>(free_count) / static_cast<double>(pts.size());
}

std::string to_string(ConsistencyEvent::Kind kind) {
  switch (kind) {
    case ConsistencyEvent::Kind::Created: return "created";
    case ConsistencyEvent::Kind::Observed: return "observed";
    case ConsistencyEvent::Kind::Negative: return "negative";
    case ConsistencyEvent::Kind::Removed: return "removed";
  }
  return "unknown";
}

namespace {

ConsistencyEvent make_event(const ObjectEntry& o, ConsistencyEvent::Kind kind, double time, double delta,
                            bool clamped) {
  return {time, o.id, kind, o.params, expected_consistency(o.params), delta, clamped};
}

}  // namespace

std::vector<ConsistencyEvent> process_frame(ObjectLibrary& library, const std::vector<ObservationSegment>& segments,
                                            const std::vector<DepthFrame>& frames, const MapperConfig& cfg,
                                            double time) {
  std::vector<ConsistencyEvent> events;
  const Association assoc = associate(segments, library, cfg.gate, frames);
  std::vector<char> remove(library.objects.size(), 0);
  std::vector<int> spawn = assoc.unmatched_segments;
  std::vector<int> expected = assoc.unobserved_expected;

  for (const auto& [si, oi] : assoc.pairs) {
    auto& obj = library.objects[static_cast<size_t>(oi)];
    const auto& seg = segments[static_cast<size_t>(si)];
    const auto delta = geometric_consistency(obj, seg, cfg);
    if (!delta) {
      expected.push_back(oi);
      spawn.push_back(si);
      continue;
    }
    const auto upd = bayes_update(obj.params, {*delta, cfg.semantic_label}, cfg.consistency);
    obj.params = upd.params;
    ++obj.observations;
    obj.last_seen = time;
    if (upd.moments.inlier_weight >= 0.5) obj = integrate_segment(obj, seg, cfg);
    events.push_back(make_event(obj, ConsistencyEvent::Kind::Observed, time, *delta, upd.clamped || upd.delta_clamped));
    if (expected_consistency(obj.params) < cfg.theta_change) {
      remove[static_cast<size_t>(oi)] = 1;
      spawn.push_back(si);
    }
  }
  std::sort(expected.begin(), expected.end());
  for (int oi : expected) {
    auto& obj = library.objects[static_cast<size_t>(oi)];
    if (free_space_coverage(obj, frames, cfg) < cfg.f_miss) continue;
    const double dmax = cfg.consistency.delta_max;
    const auto upd = bayes_update(obj.params, {dmax, 0}, cfg.consistency);
    obj.params = upd.params;
    events.push_back(make_event(obj, ConsistencyEvent::Kind::Negative, time, dmax, upd.clamped));
    if (expected_consistency(obj.params) < cfg.theta_change) remove[static_cast<size_t>(oi)] = 1;
  }

  std::vector<ObjectEntry> kept;
  for (size_t i = 0; i < library.objects.size(); ++i) {
    if (remove[i]) {
      events.push_back(make_event(library.objects[i], ConsistencyEvent::Kind::Removed, time, 0.0, false));
    } else {
      kept.push_back(std::move(library.objects[i]));
    }
  }
  library.objects = std::move(kept);

  std::sort(spawn.begin(), spawn.end());
  for (int si : spawn) {
    library.objects.push_back(make_object(library.next_id++, segments[static_cast<size_t>(si)], cfg, time));
    events.push_back(make_event(library.objects.back(), ConsistencyEvent::Kind::Created, time, 0.0, false));
  }
  return events;
}

}  // namespace phtmpc
