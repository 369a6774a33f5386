#include "phtmpc/scenario/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <limits>
#include <random>
#include <set>

#include "phtmpc/errors.hpp"
#include "phtmpc/mapping/local_edf.hpp"
#include "phtmpc/mapping/segmentation.hpp"
#include "phtmpc/planning/planner.hpp"
#include "phtmpc/scenario/scene_generator.hpp"
#include "phtmpc/sim/integrator.hpp"

namespace phtmpc {

using nlohmann::json;

std::string to_string(RunOutcome outcome) {
  switch (outcome) {
    case RunOutcome::Completed: return "completed";
    case RunOutcome::Collision: return "collision";
    case RunOutcome::DurationCap: return "duration_cap";
  }
  return "?";
}

int exit_code(RunOutcome outcome) {
  switch (outcome) {
    case RunOutcome::Completed: return 0;
    case RunOutcome::Collision: return 2;
    case RunOutcome::DurationCap: return 1;
  }
  return 1;
}

std::vector<Vec3> snapshot_occupied_points(const MapSnapshot& snapshot) {
  std::vector<Vec3> out;
  if (!snapshot.library) return out;
  for (const auto& o : snapshot.library->objects) {
    const auto pts = o.occupied_points();
    out.insert(out.end(), pts.begin(), pts.end());
  }
  return out;
}

namespace {

json vec_json(const VecX& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json boxes_json(const WorldState& w) {
  json a = json::array();
  for (const auto& b : w.boxes) a.push_back({b.id, b.x, b.y, b.yaw, b.size.x(), b.size.y(), b.size.z(), b.level});
  return a;
}

double yaw_of(const Mat3& r) { return std::atan2(r(1, 0), r(0, 0)); }

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double l2 = ab.squaredNorm();
  const double s = l2 > 0.0 ? std::clamp((p - a).dot(ab) / l2, 0.0, 1.0) : 0.0;
  return (p - (a + s * ab)).norm();
}

double polyline_distance(const Vec2& p, const std::vector<Vec2>& path) {
  if (path.empty()) return std::numeric_limits<double>::infinity();
  if (path.size() == 1) return (p - path.front()).norm();
  double d = std::numeric_limits<double>::infinity();
  for (size_t i = 1; i < path.size(); ++i) d = std::min(d, point_segment_distance(p, path[i - 1], path[i]));
  return d;
}

struct PendingFrame {
  double release = 0.0;
  DepthFrame frame;
};

class Runner {
 public:
  Runner(const ScenarioConfig& config, std::uint64_t seed, std::string trial)
      : cfg_(config), seed_(seed), trial_(std::move(trial)), model_(RobotModel::reference()), rng_(seed) {
    cfg_.seed = seed;
    inflation_ = cfg_.planner.inflation.value_or(model_.base_radius() + cfg_.safety.delta_safe);
    if (cfg_.scene) {
      cfg_.world = generate_scene(*cfg_.scene, seed, inflation_, cfg_.planner, cfg_.mapping.voxel_size).world;
    }
    if (cfg_.safety.self_pairs.empty()) cfg_.safety.self_pairs = SafetySpec::default_self_pairs(model_);
    cfg_.validate(model_);
    if (trial_.empty()) trial_ = cfg_.name + "-s" + std::to_string(seed);
    world_ = cfg_.world;
    world_.seed = seed;
    state_.q = cfg_.initial_q.size() ? cfg_.initial_q : model_.home;
    state_.v = VecX::Zero(model_.dof());
    next_fire_.assign(cfg_.cameras.size(), 0.0);
  }

  RunResult run();

 private:
  // --- sensing and mapping
  void sense(double t);
  void map(double t);
  void publish_snapshot(double t);
  // --- tasks
  void start_subtask(double t);
  bool check_subtask(double t);
  void maybe_replan(double t);
  void replan(double t, const std::string& reason);
  TaskStack build_stack(double t);
  ReferenceTrajectory lookahead_reference(double t) const;
  // --- logging
  void log_state(double t);
  void finish(double t, RunOutcome outcome);

  Pose3 base_pose() const { return Pose3::planar(state_.q(0), state_.q(1), state_.q(2)); }

  ScenarioConfig cfg_;
  std::uint64_t seed_;
  std::string trial_;
  RobotModel model_;
  std::mt19937_64 rng_;
  double inflation_ = 0.0;

  WorldState world_;
  std::set<std::string> reached_;
  RobotState state_;
  RunLog log_;
  RunResult result_;

  std::vector<double> next_fire_;
  std::deque<PendingFrame> pending_;
  ObjectLibrary library_;
  std::unique_ptr<VoxelBaselineMap> baseline_;
  SnapshotPtr snapshot_;
  OccupancyGrid2D occupancy_;
  std::uint64_t version_ = 0;
  size_t gt_world_changes_ = std::numeric_limits<size_t>::max();

  int subtask_ = -1;
  double dwell_start_ = -1.0;
  // navigate
  bool have_ref_ = false;
  ReferenceTrajectory base_ref_;
  std::vector<Vec2> plan_polyline_;
  OccupancyGrid2D plan_grid_;
  double last_plan_time_ = -1e9;
  size_t next_wp_ = 0;
  // manipulate
  Pose3 base_hold_;

  Solution solution_;
  double last_state_time_ = -1.0;
};

void Runner::log_state(double t) {
  if (t <= last_state_time_) return;
  last_state_time_ = t;
  log_.append("state", t, {{"q", vec_json(state_.q)}, {"v", vec_json(state_.v)}});
  const MetricSample m = sample_metrics(world_, model_, state_.q, state_.v);
  log_.append("metric", t, {{"clearance", m.clearance}, {"base_distance", m.base_distance}, {"approach", m.approach}});
}

void Runner::sense(double t) {
  if (cfg_.mapper == MapperKind::GroundTruth) return;
  const Kinematics kin(model_, state_.q);
  for (size_t c = 0; c < cfg_.cameras.size(); ++c) {
    const auto& spec = cfg_.cameras[c];
    if (t + 1e-9 < next_fire_[c]) continue;
    while (next_fire_[c] <= t + 1e-9) next_fire_[c] += 1.0 / spec.rate;
    const Pose3 pose = kin.frame_pose(spec.frame) * spec.mount;
    DepthFrame frame = render_depth(world_, pose, spec, rng_);
    frame.stamp = t;
    pending_.push_back({t + spec.latency, std::move(frame)});
  }
  std::stable_sort(pending_.begin(), pending_.end(), [](const PendingFrame& a, const PendingFrame& b) {
    return a.release < b.release || (a.release == b.release && a.frame.stamp < b.frame.stamp);
  });
}

void Runner::map(double t) {
  if (cfg_.mapper == MapperKind::GroundTruth) {
    if (world_.applied_changes != gt_world_changes_) {
      gt_world_changes_ = world_.applied_changes;
      publish_snapshot(t);
    }
    return;
  }
  bool updated = false;
  while (!pending_.empty() && pending_.front().release <= t + 1e-9) {
    // Frames captured at the same instant are fused into one mapper step.
    const double stamp = pending_.front().frame.stamp;
    std::vector<DepthFrame> frames;
    while (!pending_.empty() && pending_.front().release <= t + 1e-9 && pending_.front().frame.stamp == stamp) {
      frames.push_back(std::move(pending_.front().frame));
      pending_.pop_front();
    }
    std::vector<Vec3> points;
    for (const auto& f : frames) {
      const auto hits = f.hit_points();
      points.insert(points.end(), hits.begin(), hits.end());
    }
    const auto segments = segment_cloud(points, cfg_.mapping.segmentation);
    if (cfg_.mapper == MapperKind::Object) {
      const auto events = process_frame(library_, segments, frames, cfg_.mapping, stamp);
      for (const auto& e : events) {
        log_.append("consistency", e.time,
                    {{"id", e.id},
                     {"kind", to_string(e.kind)},
                     {"mu", e.params.mu},
                     {"sigma", e.params.sigma},
                     {"alpha", e.params.alpha},
                     {"beta", e.params.beta},
                     {"expected", e.expected},
                     {"delta", e.delta},
                     {"clamped", e.clamped}});
      }
    } else {
      baseline_->update(segments, stamp);
    }
    updated = true;
  }
  if (updated) publish_snapshot(t);
}

void Runner::publish_snapshot(double t) {
  auto snap = std::make_shared<MapSnapshot>();
  snap->version = ++version_;
  snap->time = t;
  snap->theta_cutoff = cfg_.mapping.theta_cutoff;
  const double h = cfg_.mapping.voxel_size;
  json objects = json::array();
  switch (cfg_.mapper) {
    case MapperKind::Object: {
      snap->library = std::make_shared<const ObjectLibrary>(library_);
      snap->edf = build_local_edf(library_, cfg_.map_region, cfg_.mapping.theta_zero, cfg_.mapping.theta_cutoff, h);
      for (const auto& o : library_.objects) {
        const auto pts = o.occupied_points();
        Vec3 c = Vec3::Zero();
        for (const auto& p : pts) c += p;
        if (!pts.empty()) c /= static_cast<double>(pts.size());
        objects.push_back({{"id", o.id},
                           {"centroid", {c.x(), c.y(), c.z()}},
                           {"voxels", pts.size()},
                           {"expected", expected_consistency(o.params)}});
      }
      break;
    }
    case MapperKind::Voxel: {
      auto lib = std::make_shared<ObjectLibrary>(baseline_->as_library());
      snap->edf = build_local_edf(*lib, cfg_.map_region, cfg_.mapping.theta_zero, cfg_.mapping.theta_cutoff, h);
      objects.push_back({{"id", 0}, {"voxels", baseline_->empty() ? 0 : baseline_->cumulative().occupied_count()}});
      snap->library = std::move(lib);
      break;
    }
    case MapperKind::GroundTruth: {
      snap->edf = ground_truth_edf(world_, cfg_.map_region, h, cfg_.mapping.theta_cutoff);
      for (auto& v : snap->edf.values()) v = std::min(v, cfg_.mapping.theta_cutoff);
      break;
    }
  }
  occupancy_ = occupancy_from_edf(snap->edf, cfg_.planner.z_low, cfg_.planner.z_high, inflation_, snap->version);
  if (cfg_.planner.bounds) {
    const auto& b = *cfg_.planner.bounds;
    block_outside(occupancy_, b[0], b[1], b[2], b[3]);
  }
  log_.append("snapshot", t,
              {{"version", snap->version},
               {"objects", objects},
               {"occupied_cells", occupancy_.count_occupied()},
               {"hash", snap->content_hash()}});
  snapshot_ = std::move(snap);
}

void Runner::start_subtask(double t) {
  const auto& s = cfg_.tasks.subtasks[static_cast<size_t>(subtask_)];
  dwell_start_ = -1.0;
  have_ref_ = false;
  next_wp_ = 0;
  last_plan_time_ = -1e9;
  plan_polyline_.clear();
  base_hold_ = base_pose();
  log_.append("task", t,
              {{"subtask", subtask_},
               {"status", "start"},
               {"type", s.type == SubtaskType::Navigate ? "navigate" : "manipulate"}});
}

bool Runner::check_subtask(double t) {
  const auto& s = cfg_.tasks.subtasks[static_cast<size_t>(subtask_)];
  const auto& tol = cfg_.tasks.tolerances;
  const double dwell = s.dwell.value_or(tol.dwell);
  bool within = false;
  if (s.type == SubtaskType::Navigate) {
    const Vec2 p(state_.q(0), state_.q(1));
    while (next_wp_ + 1 < s.waypoints.size() && (p - s.waypoints[next_wp_]).norm() < cfg_.tasks.waypoint_radius) {
      const std::string name = "waypoint:" + std::to_string(subtask_) + ":" + std::to_string(next_wp_);
      reached_.insert(name);
      log_.append("event", t, {{"name", name}});
      ++next_wp_;
    }
    if (have_ref_ && next_wp_ + 1 == s.waypoints.size()) {
      const double goal_yaw = yaw_of(base_ref_.poses.back().orientation);
      within = (p - s.waypoints.back()).norm() < tol.base_position &&
               std::abs(wrap_angle(state_.q(2) - goal_yaw)) < tol.base_yaw;
    }
  } else {
    const Pose3 ee = forward_kinematics(model_, state_.q, "ee");
    const Vec6 e = pose_error(ee, s.ee_goal);
    within = e.head<3>().norm() < tol.ee_position && e.tail<3>().norm() < tol.ee_orientation;
  }
  if (!within) {
    dwell_start_ = -1.0;
    return false;
  }
  if (dwell_start_ < 0.0) dwell_start_ = t;
  if (t - dwell_start_ + 1e-9 < dwell) return false;
  if (s.type == SubtaskType::Navigate) {
    const std::string name = "waypoint:" + std::to_string(subtask_) + ":" + std::to_string(s.waypoints.size() - 1);
    reached_.insert(name);
    log_.append("event", t, {{"name", name}});
  }
  log_.append("task", t, {{"subtask", subtask_}, {"status", "success"}});
  const std::string name = "subtask:" + std::to_string(subtask_);
  reached_.insert(name);
  log_.append("event", t, {{"name", name}});
  return true;
}

void Runner::replan(double t, const std::string& reason) {
  const auto& s = cfg_.tasks.subtasks[static_cast<size_t>(subtask_)];
  std::vector<Vec2> wps{Vec2(state_.q(0), state_.q(1))};
  for (size_t j = next_wp_; j < s.waypoints.size(); ++j) wps.push_back(s.waypoints[j]);
  last_plan_time_ = t;
  const PlanResult plan = plan_path(occupancy_, wps, cfg_.planner.snap_radius);
  if (!plan.ok) {
    log_.append("planner", t,
                {{"event", "fail"}, {"reason", reason}, {"version", occupancy_.source_version},
                 {"diagnostic", plan.diagnostic}});
    return;
  }
  // The robot already stands at the first vertex; keep that vertex exact.
  std::vector<Vec2> poly = plan.polyline;
  poly.front() = wps.front();
  TimingOptions opt;
  opt.v_des = cfg_.tasks.v_des;
  opt.a_max = cfg_.planner.a_max;
  opt.v0 = std::hypot(state_.v(0), state_.v(1));
  opt.t0 = t;
  opt.sample_dt = cfg_.control_dt();
  opt.initial_yaw = state_.q(2);
  base_ref_ = time_parameterize(poly, opt);
  have_ref_ = true;
  plan_polyline_ = poly;
  plan_grid_ = occupancy_;
  json path = json::array();
  for (const auto& p : poly) path.push_back({p.x(), p.y()});
  log_.append("planner", t,
              {{"event", "replan"},
               {"reason", reason},
               {"version", occupancy_.source_version},
               {"path", path},
               {"length", polyline_length(poly)},
               {"snapped", plan.snapped_waypoints}});
}

void Runner::maybe_replan(double t) {
  const auto& s = cfg_.tasks.subtasks[static_cast<size_t>(subtask_)];
  if (!have_ref_) {
    if (t - last_plan_time_ + 1e-9 >= cfg_.planner.replan_period || last_plan_time_ < -1e8) replan(t, "initial");
    return;
  }
  // Near the final waypoint the reference is frozen so the terminal heading stays put.
  const Vec2 p(state_.q(0), state_.q(1));
  if (next_wp_ + 1 == s.waypoints.size() && (p - s.waypoints.back()).norm() < 2.0 * cfg_.tasks.waypoint_radius) {
    return;
  }
  if (occupancy_.source_version != plan_grid_.source_version && occupancy_.nx == plan_grid_.nx &&
      occupancy_.ny == plan_grid_.ny) {
    for (size_t k = 0; k < occupancy_.occupied.size(); ++k) {
      if (occupancy_.occupied[k] == plan_grid_.occupied[k]) continue;
      const Cell c{static_cast<int>(k) % occupancy_.nx, static_cast<int>(k) / occupancy_.nx};
      if (polyline_distance(occupancy_.center(c), plan_polyline_) <= cfg_.planner.corridor_width) {
        replan(t, "map_change");
        return;
      }
    }
  }
  if (t - last_plan_time_ + 1e-9 >= cfg_.planner.replan_period) replan(t, "periodic");
}

ReferenceTrajectory Runner::lookahead_reference(double t) const {
  const Kinematics kin(model_, state_.q);
  const Pose3 ee_in_base = kin.link_pose(0).inverse() * kin.frame_pose("ee");
  const Mat3 current = kin.frame_pose("ee").orientation;
  ReferenceTrajectory ref;
  ref.frame = "ee";
  const double dt = cfg_.mpc.dt();
  for (int k = 0; k <= cfg_.mpc.nodes; ++k) {
    const double tau = t + k * dt;
    const Pose3 base = have_ref_ ? base_ref_.sample(tau) : base_pose();
    const Vec3 ee = (base * ee_in_base).position;
    Vec3 target = have_ref_ ? base_ref_.sample(tau + cfg_.tasks.lookahead_preview).position : base.position;
    target.z() = cfg_.tasks.lookahead_height;
    const Vec3 d = target - ee;
    const double horiz = std::hypot(d.x(), d.y());
    Mat3 r = current;
    if (horiz > 0.05) {
      r = rot_z(std::atan2(d.y(), d.x())) * rot_y(std::atan2(-d.z(), horiz));
    } else {
      r = rot_z(yaw_of(base.orientation)) * rot_y(std::atan2(-d.z(), std::max(horiz, 0.3)));
    }
    ref.times.push_back(tau);
    ref.poses.push_back({ee, r});
  }
  return ref;
}

TaskStack Runner::build_stack(double t) {
  const auto& s = cfg_.tasks.subtasks[static_cast<size_t>(subtask_)];
  TaskStack stack;
  if (s.type == SubtaskType::Navigate) {
    ReferenceTrajectory ref = have_ref_ ? base_ref_ : ReferenceTrajectory::constant("base", base_hold_, t);
    stack.push_back(make_base_task(std::move(ref), cfg_.tasks.base_weight));
    TrackingTask look = make_frame_task("ee_lookahead", "ee", lookahead_reference(t), cfg_.tasks.ee_weight);
    look.qe.head<3>().setZero();
    look.qe_dot.head<3>().setZero();
    stack.push_back(std::move(look));
  } else {
    stack.push_back(make_frame_task("ee", "ee", ReferenceTrajectory::constant("ee", s.ee_goal, t), cfg_.tasks.ee_weight));
    stack.push_back(make_base_task(ReferenceTrajectory::constant("base", base_hold_, t), cfg_.tasks.base_weight));
  }
  return stack;
}

void Runner::finish(double t, RunOutcome outcome) {
  log_state(t);
  log_.append("end", t, {{"reason", to_string(outcome)}});
  result_.outcome = outcome;
}

RunResult Runner::run() {
  log_.append("meta", 0.0,
              {{"trial", trial_},
               {"scenario", cfg_.name},
               {"seed", seed_},
               {"robot", "reference"},
               {"mapper", to_string(cfg_.mapper)},
               {"mode", to_string(cfg_.safety.mode)},
               {"delta", cfg_.safety.delta_safe},
               {"gamma", cfg_.safety.mode == SafetyMode::CBF ? json(cfg_.safety.gamma) : json(nullptr)},
               {"v_des", cfg_.tasks.v_des},
               {"subtasks", cfg_.tasks.subtasks.size()},
               {"control_dt", cfg_.control_dt()}});
  log_.append("world", 0.0, {{"boxes", boxes_json(world_)}, {"applied", world_.applied_changes}});
  if (cfg_.mapper == MapperKind::Voxel) baseline_ = std::make_unique<VoxelBaselineMap>(cfg_.mapping);
  if (cfg_.mapper != MapperKind::GroundTruth) publish_snapshot(0.0);

  const double dt = cfg_.control_dt();
  const double dt_sub = dt / cfg_.substeps;
  HtmpcContext ctx;
  ctx.model = &model_;
  ctx.safety = cfg_.safety;
  ctx.config = cfg_.mpc;

  bool done = false;
  if (cfg_.tasks.subtasks.empty()) {
    finish(0.0, RunOutcome::Completed);
    done = true;
  } else {
    subtask_ = 0;
    start_subtask(0.0);
  }

  for (long k = 0; !done; ++k) {
    const double t = static_cast<double>(k) * dt;
    const size_t before = world_.applied_changes;
    world_ = apply_scripted_changes(world_, cfg_.changes, t, reached_);
    if (world_.applied_changes != before) {
      log_.append("world", t, {{"boxes", boxes_json(world_)}, {"applied", world_.applied_changes}});
    }
    log_state(t);
    if (t >= cfg_.duration - 1e-9) {
      finish(t, RunOutcome::DurationCap);
      break;
    }
    sense(t);
    map(t);

    if (check_subtask(t)) {
      if (++subtask_ >= static_cast<int>(cfg_.tasks.subtasks.size())) {
        finish(t, RunOutcome::Completed);
        break;
      }
      start_subtask(t);
    }
    if (cfg_.tasks.subtasks[static_cast<size_t>(subtask_)].type == SubtaskType::Navigate) maybe_replan(t);

    const TaskStack stack = build_stack(t);
    ctx.edf = snapshot_ ? &snapshot_->edf : nullptr;
    VecX x0(2 * model_.dof());
    x0 << state_.q, state_.v;
    const auto t0 = std::chrono::steady_clock::now();
    Solution sol = solve_htmpc(stack, x0, t, ctx, solution_.ok ? solution_ : Solution{});
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result_.solve_seconds.push_back(elapsed);

    json names = json::array();
    for (const auto& task : stack) names.push_back(task.name);
    json rec{{"ok", sol.ok},
             {"status", to_string(sol.status)},
             {"h_min", sol.h_min},
             {"max_slack", sol.max_slack},
             {"kkt", sol.kkt_residual},
             {"qp_iterations", sol.qp_iterations},
             {"sqp_iterations", sol.sqp_iterations},
             {"stack", names},
             {"subtask", subtask_},
             {"snapshot", snapshot_ ? snapshot_->version : 0}};
    if (!ctx.edf) rec["h_min"] = nullptr;
    if (!sol.diagnostic.empty()) rec["diagnostic"] = sol.diagnostic;
    if (cfg_.log_solve_time) rec["solve_seconds"] = elapsed;
    solution_ = std::move(sol);

    const VecX v_start = state_.v;
    bool clamped = false;
    bool collided = false;
    double t_hit = t;
    for (int s = 1; s <= cfg_.substeps; ++s) {
      const Command cmd = extract_command(solution_, s * dt_sub, cfg_.mpc, v_start);
      if (s == 1) {
        log_.append("cmd", t, {{"v", vec_json(cmd.v)}, {"braking", cmd.braking}});
      }
      const VecX u = ((cmd.v - state_.v) / dt_sub).cwiseMax(-model_.a_max).cwiseMin(model_.a_max);
      const auto step = integrate_robot(state_, u, dt_sub, model_.v_max);
      state_ = step.state;
      clamped = clamped || step.clamped;
      if (whole_body_clearance(world_, model_, state_.q).value <= 0.0) {
        collided = true;
        t_hit = t + s * dt_sub;
        break;
      }
    }
    if (clamped) rec["velocity_clamped"] = true;
    log_.append("solver", t, std::move(rec));
    if (collided) {
      finish(t_hit, RunOutcome::Collision);
      break;
    }
  }

  result_.log = std::move(log_);
  result_.metrics = compute_metrics(result_.log);
  result_.final_world = world_;
  result_.final_snapshot = snapshot_;
  return std::move(result_);
}

}  // namespace

RunResult run_scenario(const ScenarioConfig& config, std::uint64_t seed, const std::string& trial) {
  Runner runner(config, seed, trial);
  return runner.run();
}

}  // namespace phtmpc
