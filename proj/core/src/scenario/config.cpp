#include "phtmpc/scenario/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "phtmpc/errors.hpp"
#include "phtmpc/geometry/so3.hpp"

namespace phtmpc {

using nlohmann::json;

std::string to_string(MapperKind kind) {
  switch (kind) {
    case MapperKind::Object: return "object";
    case MapperKind::Voxel: return "voxel";
    case MapperKind::GroundTruth: return "ground_truth";
  }
  return "?";
}

std::string to_string(SafetyMode mode) { return mode == SafetyMode::CBF ? "cbf" : "edf"; }

namespace {

// Object accessor that remembers which keys were read so leftovers can be
// reported as unknown.
class Node {
 public:
  Node(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail("expected an object");
  }

  [[noreturn]] void fail(const std::string& msg) const { throw ConfigError(path_ + ": " + msg); }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }

  const json& raw(const std::string& key) {
    if (!has(key)) fail("missing key '" + key + "'");
    return j_.at(key);
  }

  std::string sub(const std::string& key) const { return path_ + "." + key; }

  Node child(const std::string& key) { return Node(raw(key), sub(key)); }

  double num(const std::string& key, double fallback) { return has(key) ? num(key) : fallback; }
  double num(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_number()) fail("'" + key + "' must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail("'" + key + "' must be finite");
    return d;
  }
  int integer(const std::string& key, int fallback) {
    if (!has(key)) return fallback;
    const auto& v = raw(key);
    if (!v.is_number_integer()) fail("'" + key + "' must be an integer");
    return v.get<int>();
  }
  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const auto& v = raw(key);
    if (!v.is_boolean()) fail("'" + key + "' must be a boolean");
    return v.get<bool>();
  }
  std::string str(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const auto& v = raw(key);
    if (!v.is_string()) fail("'" + key + "' must be a string");
    return v.get<std::string>();
  }
  std::vector<double> vec(const std::string& key, size_t n) {
    const auto& v = raw(key);
    if (!v.is_array() || (n > 0 && v.size() != n)) {
      fail("'" + key + "' must be an array" + (n > 0 ? " of " + std::to_string(n) + " numbers" : ""));
    }
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) fail("'" + key + "' must contain numbers only");
      out.push_back(e.get<double>());
    }
    return out;
  }
  Vec3 vec3(const std::string& key) {
    const auto v = vec(key, 3);
    return Vec3(v[0], v[1], v[2]);
  }
  Vec2 vec2(const std::string& key) {
    const auto v = vec(key, 2);
    return Vec2(v[0], v[1]);
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) fail("unknown key '" + it.key() + "'");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

Pose3 parse_pose(Node n) {
  Pose3 p;
  if (n.has("xyz")) p.position = n.vec3("xyz");
  if (n.has("rpy")) {
    const Vec3 r = n.vec3("rpy");
    p.orientation = rpy_to_rotation(r.x(), r.y(), r.z());
  }
  n.finish();
  return p;
}

BoxObject parse_box(Node n) {
  BoxObject b;
  b.id = n.integer("id", 0);
  b.x = n.num("x");
  b.y = n.num("y");
  b.yaw = n.num("yaw", 0.0);
  if (n.has("size")) b.size = n.vec3("size");
  b.level = n.integer("level", 0);
  if (b.level < 0) n.fail("'level' must be non-negative");
  n.finish();
  return b;
}

ScriptedChange parse_change(Node n) {
  ScriptedChange c;
  Node trig = n.child("trigger");
  if (trig.has("time")) c.trigger.time = trig.num("time");
  c.trigger.event = trig.str("event", "");
  if (c.trigger.time && !c.trigger.event.empty()) trig.fail("give either 'time' or 'event'");
  trig.finish();
  const std::string kind = n.str("kind", "");
  if (kind == "remove") {
    c.kind = ChangeKind::Remove;
    c.id = n.integer("id", 0);
  } else if (kind == "insert") {
    c.kind = ChangeKind::Insert;
    c.box = parse_box(n.child("box"));
  } else if (kind == "relocate") {
    c.kind = ChangeKind::Relocate;
    c.id = n.integer("id", 0);
    c.x = n.num("x");
    c.y = n.num("y");
    c.yaw = n.num("yaw", 0.0);
  } else {
    n.fail("'kind' must be one of remove, insert, relocate");
  }
  n.finish();
  return c;
}

DepthCameraSpec parse_camera(Node n) {
  DepthCameraSpec c;
  c.frame = n.str("frame", c.frame);
  if (n.has("mount")) c.mount = parse_pose(n.child("mount"));
  c.hfov = n.num("hfov", c.hfov);
  c.vfov = n.num("vfov", c.vfov);
  c.cols = n.integer("cols", c.cols);
  c.rows = n.integer("rows", c.rows);
  c.max_range = n.num("max_range", c.max_range);
  c.noise_sigma = n.num("noise_sigma", c.noise_sigma);
  c.latency = n.num("latency", c.latency);
  c.rate = n.num("rate", c.rate);
  n.finish();
  return c;
}

void parse_mapper(Node n, ScenarioConfig& cfg) {
  const std::string kind = n.str("kind", "object");
  if (kind == "object") {
    cfg.mapper = MapperKind::Object;
  } else if (kind == "voxel") {
    cfg.mapper = MapperKind::Voxel;
  } else if (kind == "ground_truth") {
    cfg.mapper = MapperKind::GroundTruth;
  } else {
    n.fail("'kind' must be one of object, voxel, ground_truth");
  }
  auto& m = cfg.mapping;
  m.voxel_size = n.num("voxel_size", m.voxel_size);
  m.submap_padding = n.integer("submap_padding", m.submap_padding);
  m.gate = n.num("gate", m.gate);
  m.theta_change = n.num("theta_change", m.theta_change);
  m.theta_zero = n.num("theta_zero", m.theta_zero);
  m.theta_cutoff = n.num("theta_cutoff", m.theta_cutoff);
  m.f_min = n.num("f_min", m.f_min);
  m.f_miss = n.num("f_miss", m.f_miss);
  m.free_margin = n.num("free_margin", m.free_margin);
  m.semantic_label = n.integer("semantic_label", m.semantic_label);
  if (n.has("region")) {
    Node r = n.child("region");
    cfg.map_region.min = r.vec3("min");
    cfg.map_region.max = r.vec3("max");
    r.finish();
  }
  if (n.has("consistency")) {
    Node c = n.child("consistency");
    auto& k = m.consistency;
    k.tau = c.num("tau", k.tau);
    k.delta_max = c.num("delta_max", k.delta_max);
    k.sigma_min = c.num("sigma_min", k.sigma_min);
    k.param_floor = c.num("param_floor", k.param_floor);
    k.param_ceil = c.num("param_ceil", k.param_ceil);
    c.finish();
  }
  if (n.has("prior")) {
    Node p = n.child("prior");
    m.prior.mu = p.num("mu", m.prior.mu);
    m.prior.sigma = p.num("sigma", m.prior.sigma);
    m.prior.alpha = p.num("alpha", m.prior.alpha);
    m.prior.beta = p.num("beta", m.prior.beta);
    p.finish();
  }
  if (n.has("segmentation")) {
    Node s = n.child("segmentation");
    auto& g = m.segmentation;
    g.ground_height = s.num("ground_height", g.ground_height);
    g.cluster_radius = s.num("cluster_radius", g.cluster_radius);
    g.min_points = s.integer("min_points", g.min_points);
    s.finish();
  }
  n.finish();
}

void parse_safety(Node n, SafetySpec& s) {
  const std::string mode = n.str("mode", "cbf");
  if (mode == "cbf") {
    s.mode = SafetyMode::CBF;
  } else if (mode == "edf") {
    s.mode = SafetyMode::EDF;
  } else {
    n.fail("'mode' must be cbf or edf");
  }
  s.delta_safe = n.num("delta", s.delta_safe);
  s.gamma = n.num("gamma", s.gamma);
  s.self_margin = n.num("self_margin", s.self_margin);
  n.finish();
}

void parse_mpc(Node n, MpcConfig& m) {
  m.horizon = n.num("horizon", m.horizon);
  m.nodes = n.integer("nodes", m.nodes);
  m.qx = n.num("qx", m.qx);
  m.qu = n.num("qu", m.qu);
  m.eps_reg = n.num("eps_reg", m.eps_reg);
  m.rho_state = n.num("rho_state", m.rho_state);
  m.rho_safety = n.num("rho_safety", m.rho_safety);
  m.sqp_iterations = n.integer("sqp_iterations", m.sqp_iterations);
  m.kkt_tolerance = n.num("kkt_tolerance", m.kkt_tolerance);
  m.eps_lex = n.num("eps_lex", m.eps_lex);
  m.staleness = n.num("staleness", m.staleness);
  m.brake_tau = n.num("brake_tau", m.brake_tau);
  m.self_collision = n.boolean("self_collision", m.self_collision);
  n.finish();
}

void parse_planner(Node n, PlannerSpec& p) {
  if (n.has("z_band")) {
    const auto z = n.vec("z_band", 2);
    p.z_low = z[0];
    p.z_high = z[1];
  }
  if (n.has("inflation")) p.inflation = n.num("inflation");
  p.snap_radius = n.num("snap_radius", p.snap_radius);
  p.replan_period = n.num("replan_period", p.replan_period);
  p.corridor_width = n.num("corridor_width", p.corridor_width);
  p.a_max = n.num("a_max", p.a_max);
  if (n.has("bounds")) {
    const auto b = n.vec("bounds", 4);
    p.bounds = std::array<double, 4>{b[0], b[1], b[2], b[3]};
  }
  n.finish();
}

Subtask parse_subtask(Node n) {
  Subtask s;
  const std::string type = n.str("type", "");
  if (type == "navigate") {
    s.type = SubtaskType::Navigate;
    const auto& wps = n.raw("waypoints");
    if (!wps.is_array() || wps.empty()) n.fail("'waypoints' must be a non-empty array");
    for (const auto& w : wps) {
      if (!w.is_array() || w.size() != 2 || !w[0].is_number() || !w[1].is_number()) {
        n.fail("each waypoint must be [x, y]");
      }
      s.waypoints.emplace_back(w[0].get<double>(), w[1].get<double>());
    }
  } else if (type == "manipulate") {
    s.type = SubtaskType::Manipulate;
    s.ee_goal = parse_pose(n.child("ee_goal"));
  } else {
    n.fail("'type' must be navigate or manipulate");
  }
  if (n.has("dwell")) s.dwell = n.num("dwell");
  n.finish();
  return s;
}

void parse_tasks(Node n, TaskScript& t) {
  t.v_des = n.num("v_des", t.v_des);
  t.lookahead_preview = n.num("lookahead_preview", t.lookahead_preview);
  t.lookahead_height = n.num("lookahead_height", t.lookahead_height);
  t.waypoint_radius = n.num("waypoint_radius", t.waypoint_radius);
  t.base_weight = n.num("base_weight", t.base_weight);
  t.ee_weight = n.num("ee_weight", t.ee_weight);
  if (n.has("tolerances")) {
    Node o = n.child("tolerances");
    auto& tol = t.tolerances;
    tol.base_position = o.num("base_position", tol.base_position);
    tol.base_yaw = o.num("base_yaw", tol.base_yaw);
    tol.ee_position = o.num("ee_position", tol.ee_position);
    tol.ee_orientation = o.num("ee_orientation", tol.ee_orientation);
    tol.dwell = o.num("dwell", tol.dwell);
    o.finish();
  }
  const auto& script = n.raw("script");
  if (!script.is_array()) n.fail("'script' must be an array");
  for (size_t i = 0; i < script.size(); ++i) {
    t.subtasks.push_back(parse_subtask(Node(script[i], n.sub("script") + "[" + std::to_string(i) + "]")));
  }
  n.finish();
}

void parse_scene(Node n, SceneGeneratorSpec& s) {
  const std::string gen = n.str("generator", "random_boxes");
  if (gen != "random_boxes") n.fail("'generator' must be random_boxes");
  if (n.has("area")) {
    const auto a = n.vec("area", 4);
    s.area = {a[0], a[1], a[2], a[3]};
  }
  s.min_boxes = n.integer("min_boxes", s.min_boxes);
  s.max_boxes = n.integer("max_boxes", s.max_boxes);
  s.box_size = n.num("box_size", s.box_size);
  s.stack_probability = n.num("stack_probability", s.stack_probability);
  s.min_separation = n.num("min_separation", s.min_separation);
  if (n.has("corridor")) {
    Node c = n.child("corridor");
    s.corridor_start = c.vec2("start");
    s.corridor_goal = c.vec2("goal");
    c.finish();
  }
  s.max_attempts = n.integer("max_attempts", s.max_attempts);
  if (s.min_boxes < 1 || s.max_boxes < s.min_boxes) n.fail("need 1 <= min_boxes <= max_boxes");
  if (!(s.box_size > 0.0)) n.fail("'box_size' must be positive");
  if (s.stack_probability < 0.0 || s.stack_probability > 1.0) n.fail("'stack_probability' must lie in [0, 1]");
  if (s.max_attempts < 1) n.fail("'max_attempts' must be positive");
  n.finish();
}

}  // namespace

std::vector<DepthCameraSpec> default_cameras() {
  DepthCameraSpec base;
  base.frame = "base";
  base.mount.position = Vec3(0.25, 0.0, 0.45);
  base.mount.orientation = rot_y(0.25);
  DepthCameraSpec ee;
  ee.frame = "ee";
  ee.hfov = 1.0;
  ee.vfov = 0.8;
  ee.cols = 32;
  ee.rows = 24;
  return {base, ee};
}

ScenarioConfig parse_scenario(const json& doc) {
  ScenarioConfig cfg;
  Node root(doc, "scenario");
  cfg.name = root.str("name", cfg.name);
  if (root.has("seed")) {
    const auto& s = root.raw("seed");
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0)) {
      root.fail("'seed' must be a non-negative integer");
    }
    cfg.seed = s.get<std::uint64_t>();
  }
  cfg.duration = root.num("duration", cfg.duration);
  if (root.has("control")) {
    Node c = root.child("control");
    cfg.control_rate = c.num("rate", cfg.control_rate);
    cfg.substeps = c.integer("substeps", cfg.substeps);
    c.finish();
  }
  if (root.has("world")) {
    Node w = root.child("world");
    if (w.has("boxes")) {
      const auto& boxes = w.raw("boxes");
      if (!boxes.is_array()) w.fail("'boxes' must be an array");
      for (size_t i = 0; i < boxes.size(); ++i) {
        cfg.world.boxes.push_back(parse_box(Node(boxes[i], w.sub("boxes") + "[" + std::to_string(i) + "]")));
      }
    }
    if (w.has("changes")) {
      const auto& ch = w.raw("changes");
      if (!ch.is_array()) w.fail("'changes' must be an array");
      for (size_t i = 0; i < ch.size(); ++i) {
        cfg.changes.push_back(parse_change(Node(ch[i], w.sub("changes") + "[" + std::to_string(i) + "]")));
      }
    }
    w.finish();
  }
  if (root.has("scene")) {
    SceneGeneratorSpec s;
    parse_scene(root.child("scene"), s);
    cfg.scene = s;
  }
  if (root.has("robot")) {
    Node r = root.child("robot");
    const std::string model = r.str("model", "reference");
    if (model != "reference") r.fail("'model' must be reference");
    if (r.has("initial_q")) {
      const auto q = r.vec("initial_q", 0);
      cfg.initial_q = Eigen::Map<const VecX>(q.data(), static_cast<Eigen::Index>(q.size()));
    } else if (r.has("initial_base")) {
      const auto b = r.vec("initial_base", 3);
      cfg.initial_q = RobotModel::reference().home;
      cfg.initial_q.head<3>() << b[0], b[1], b[2];
    }
    r.finish();
  }
  if (root.has("cameras")) {
    const auto& cams = root.raw("cameras");
    if (!cams.is_array()) root.fail("'cameras' must be an array");
    for (size_t i = 0; i < cams.size(); ++i) {
      cfg.cameras.push_back(parse_camera(Node(cams[i], root.sub("cameras") + "[" + std::to_string(i) + "]")));
    }
  } else {
    cfg.cameras = default_cameras();
  }
  if (root.has("mapper")) parse_mapper(root.child("mapper"), cfg);
  if (root.has("safety")) parse_safety(root.child("safety"), cfg.safety);
  if (root.has("mpc")) parse_mpc(root.child("mpc"), cfg.mpc);
  if (root.has("planner")) parse_planner(root.child("planner"), cfg.planner);
  parse_tasks(root.child("tasks"), cfg.tasks);
  if (root.has("log")) {
    Node l = root.child("log");
    cfg.log_solve_time = l.boolean("solve_time", false);
    l.finish();
  }
  root.finish();
  return cfg;
}

void ScenarioConfig::validate(const RobotModel& model) const {
  if (!(duration >= 0.0)) throw ConfigError("scenario: duration must be non-negative");
  if (!(control_rate > 0.0)) throw ConfigError("scenario: control rate must be positive");
  if (substeps < 1) throw ConfigError("scenario: substeps must be positive");
  if (initial_q.size() != 0 && initial_q.size() != model.dof()) {
    throw ConfigError("scenario: initial_q needs " + std::to_string(model.dof()) + " entries");
  }
  for (const auto& c : cameras) {
    c.validate();
    if (!model.has_frame(c.frame)) throw ConfigError("camera: unknown frame '" + c.frame + "'");
  }
  mapping.validate();
  if (((map_region.max - map_region.min).array() <= 0.0).any()) {
    throw ConfigError("mapper: region max must exceed min on every axis");
  }
  safety.validate(model);
  mpc.validate();
  if (std::abs(mpc.dt() * control_rate - 1.0) > 1e-9) {
    throw ConfigError("mpc: node spacing must equal the control period");
  }
  if (!(planner.z_high > planner.z_low)) throw ConfigError("planner: z_band must be increasing");
  if (planner.inflation && !(*planner.inflation >= 0.0)) throw ConfigError("planner: inflation must be non-negative");
  if (!(planner.replan_period > 0.0) || !(planner.a_max > 0.0) || !(planner.snap_radius >= 0.0)) {
    throw ConfigError("planner: replan_period and a_max must be positive, snap_radius non-negative");
  }
  if (planner.bounds) {
    const auto& b = *planner.bounds;
    if (!(b[2] > b[0] && b[3] > b[1])) throw ConfigError("planner: bounds must be [xmin, ymin, xmax, ymax]");
  }
  if (!(tasks.v_des > 0.0)) throw ConfigError("tasks: v_des must be positive");
  const auto& tol = tasks.tolerances;
  if (!(tol.base_position > 0.0 && tol.base_yaw > 0.0 && tol.ee_position > 0.0 && tol.ee_orientation > 0.0 &&
        tol.dwell >= 0.0)) {
    throw ConfigError("tasks: tolerances must be positive and dwell non-negative");
  }
  if (!(tasks.lookahead_preview >= 0.0) || !(tasks.waypoint_radius > 0.0)) {
    throw ConfigError("tasks: lookahead_preview must be non-negative and waypoint_radius positive");
  }
  for (size_t i = 0; i < tasks.subtasks.size(); ++i) {
    const auto& s = tasks.subtasks[i];
    if (s.dwell && !(*s.dwell >= 0.0)) throw ConfigError("tasks.script[" + std::to_string(i) + "]: negative dwell");
    if (s.type == SubtaskType::Manipulate && !s.ee_goal.is_valid(1e-6)) {
      throw ConfigError("tasks.script[" + std::to_string(i) + "]: invalid ee_goal");
    }
  }
  validate_script(world, changes);
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("'" + path + "' is not valid JSON: " + e.what());
  }
}

ScenarioConfig load_scenario(const std::string& path) { return parse_scenario(load_json_file(path)); }

}  // namespace phtmpc
