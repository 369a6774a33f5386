#include "phtmpc/sim/world.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "phtmpc/errors.hpp"

namespace phtmpc {

const BoxObject* WorldState::find(int id) const {
  for (const auto& b : boxes) {
    if (b.id == id) return &b;
  }
  return nullptr;
}

namespace {

bool trigger_due(const ChangeTrigger& trig, double t, const std::set<std::string>& reached) {
  if (trig.time) return t >= *trig.time - 1e-12;
  return reached.count(trig.event) > 0;
}

void apply_one(WorldState& w, const ScriptedChange& c) {
  switch (c.kind) {
    case ChangeKind::Remove:
      std::erase_if(w.boxes, [&](const BoxObject& b) { return b.id == c.id; });
      break;
    case ChangeKind::Insert:
      w.boxes.push_back(c.box);
      break;
    case ChangeKind::Relocate:
      for (auto& b : w.boxes) {
        if (b.id == c.id) {
          b.x = c.x;
          b.y = c.y;
          b.yaw = c.yaw;
        }
      }
      break;
  }
}

}  // namespace

WorldState apply_scripted_changes(const WorldState& world, const std::vector<ScriptedChange>& events, double t,
                                  const std::set<std::string>& reached) {
  WorldState out = world;
  while (out.applied_changes < events.size() && trigger_due(events[out.applied_changes].trigger, t, reached)) {
    apply_one(out, events[out.applied_changes]);
    ++out.applied_changes;
  }
  out.time = std::max(out.time, t);
  return out;
}

void validate_script(const WorldState& initial, const std::vector<ScriptedChange>& events) {
  std::map<int, int> alive;
  for (const auto& b : initial.boxes) {
    if (alive[b.id]++ > 0) throw ConfigError("world: duplicate box id " + std::to_string(b.id));
    if ((b.size.array() <= 0.0).any()) throw ConfigError("world: box sizes must be positive");
  }
  double last_time = -std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < events.size(); ++i) {
    const auto& c = events[i];
    const std::string where = "scripted change #" + std::to_string(i);
    if (c.trigger.time) {
      if (*c.trigger.time < last_time) throw ConfigError(where + ": time triggers must be ordered");
      last_time = *c.trigger.time;
    } else if (c.trigger.event.empty()) {
      throw ConfigError(where + ": trigger needs a time or an event name");
    }
    switch (c.kind) {
      case ChangeKind::Insert:
        if (alive[c.box.id] > 0) throw ConfigError(where + ": inserted id already exists");
        if ((c.box.size.array() <= 0.0).any()) throw ConfigError(where + ": box sizes must be positive");
        alive[c.box.id] = 1;
        break;
      case ChangeKind::Remove:
        if (alive[c.id] == 0) throw ConfigError(where + ": dangling object id " + std::to_string(c.id));
        alive[c.id] = 0;
        break;
      case ChangeKind::Relocate:
        if (alive[c.id] == 0) throw ConfigError(where + ": dangling object id " + std::to_string(c.id));
        break;
    }
  }
}

double box_signed_distance(const BoxObject& box, const Vec3& p, Vec3* gradient) {
  const double c = std::cos(box.yaw), s = std::sin(box.yaw);
  const double dx = p.x() - box.x, dy = p.y() - box.y;
  const Vec3 local(c * dx + s * dy, -s * dx + c * dy, p.z() - (box.z_min() + 0.5 * box.size.z()));
  const Vec3 half = 0.5 * box.size;
  const Vec3 q = local.cwiseAbs() - half;

  const Vec3 outside = q.cwiseMax(0.0);
  const double out_norm = outside.norm();
  double d;
  Vec3 g_local;
  if (out_norm > 0.0) {
    d = out_norm;
    g_local = outside / out_norm;
  } else {
    Eigen::Index axis = 0;
    d = q.maxCoeff(&axis);
    g_local = Vec3::Zero();
    g_local(axis) = 1.0;
  }
  if (gradient) {
    for (int a = 0; a < 3; ++a) {
      if (local(a) < 0.0) g_local(a) = -g_local(a);
    }
    *gradient = Vec3(c * g_local.x() - s * g_local.y(), s * g_local.x() + c * g_local.y(), g_local.z());
  }
  return d;
}

std::optional<double> intersect_ray_box(const Vec3& origin, const Vec3& dir, const BoxObject& box) {
  const double c = std::cos(box.yaw), s = std::sin(box.yaw);
  const double ox = origin.x() - box.x, oy = origin.y() - box.y;
  const Vec3 o(c * ox + s * oy, -s * ox + c * oy, origin.z());
  const Vec3 d(c * dir.x() + s * dir.y(), -s * dir.x() + c * dir.y(), dir.z());
  const Vec3 lo(-0.5 * box.size.x(), -0.5 * box.size.y(), box.z_min());
  const Vec3 hi(0.5 * box.size.x(), 0.5 * box.size.y(), box.z_max());

  double t_near = -std::numeric_limits<double>::infinity();
  double t_far = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (std::abs(d(a)) < 1e-15) {
      if (o(a) < lo(a) || o(a) > hi(a)) return std::nullopt;
      continue;
    }
    double t1 = (lo(a) - o(a)) / d(a);
    double t2 = (hi(a) - o(a)) / d(a);
    if (t1 > t2) std::swap(t1, t2);
    t_near = std::max(t_near, t1);
    t_far = std::min(t_far, t2);
    if (t_near > t_far) return std::nullopt;
  }
  if (t_far < 0.0) return std::nullopt;
  return std::max(t_near, 0.0);
}

double world_signed_distance(const WorldState& world, const Vec3& p, Vec3* gradient, double empty_value) {
  double best = empty_value;
  bool any = false;
  for (const auto& b : world.boxes) {
    Vec3 g;
    const double d = box_signed_distance(b, p, gradient ? &g : nullptr);
    if (!any || d < best) {
      best = d;
      any = true;
      if (gradient) *gradient = g;
    }
  }
  if (!any && gradient) gradient->setZero();
  return best;
}

}  // namespace phtmpc
