#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "phtmpc/control/htmpc.hpp"
#include "phtmpc/mapping/object_library.hpp"
#include "phtmpc/safety/constraints.hpp"
#include "phtmpc/sim/depth_camera.hpp"
#include "phtmpc/sim/ground_truth.hpp"
#include "phtmpc/sim/world.hpp"

namespace phtmpc {

enum class MapperKind { Object, Voxel, GroundTruth };

std::string to_string(MapperKind kind);
std::string to_string(SafetyMode mode);

/// Random box scene; replaces the explicit box list when present.
struct SceneGeneratorSpec {
  std::array<double, 4> area{0.0, 0.0, 5.0, 5.0};  ///< xmin, ymin, xmax, ymax
  int min_boxes = 8;
  int max_boxes = 10;
  double box_size = 0.6;
  double stack_probability = 0.3;
  double min_separation = 0.9;  ///< between footprint centres
  /// Endpoints that must stay connected on the inflated ground-truth grid.
  Vec2 corridor_start{-1.0, 2.5};
  Vec2 corridor_goal{6.0, 2.5};
  int max_attempts = 200;
};

struct PlannerSpec {
  double z_low = 0.1;
  double z_high = 0.6;
  std::optional<double> inflation;  ///< defaults to base radius + delta_safe
  double snap_radius = 0.5;
  double replan_period = 1.0;
  double corridor_width = 0.5;
  double a_max = 0.8;
  /// Planner keeps the base inside this rectangle (xmin, ymin, xmax, ymax).
  std::optional<std::array<double, 4>> bounds;
};

enum class SubtaskType { Navigate, Manipulate };

struct Subtask {
  SubtaskType type = SubtaskType::Navigate;
  std::vector<Vec2> waypoints;
  Pose3 ee_goal;
  std::optional<double> dwell;
};

struct Tolerances {
  double base_position = 0.05;
  double base_yaw = 0.05;
  double ee_position = 0.02;
  double ee_orientation = 0.05;
  double dwell = 0.5;
};

struct TaskScript {
  double v_des = 0.5;
  Tolerances tolerances;
  double lookahead_preview = 1.5;
  double lookahead_height = 0.3;
  double waypoint_radius = 0.3;
  double base_weight = 10.0;
  double ee_weight = 10.0;
  std::vector<Subtask> subtasks;
};

struct ScenarioConfig {
  std::string name = "scenario";
  std::uint64_t seed = 0;
  double duration = 60.0;
  double control_rate = 10.0;
  int substeps = 10;

  WorldState world;
  std::vector<ScriptedChange> changes;
  std::optional<SceneGeneratorSpec> scene;

  VecX initial_q;  ///< empty: model home with the base at the origin
  std::vector<DepthCameraSpec> cameras;

  MapperKind mapper = MapperKind::Object;
  MapperConfig mapping;
  Region map_region{Vec3(-2.0, -2.0, 0.0), Vec3(7.0, 7.0, 1.8)};

  SafetySpec safety;
  MpcConfig mpc;
  PlannerSpec planner;
  TaskScript tasks;

  bool log_solve_time = false;

  double control_dt() const { return 1.0 / control_rate; }
  /// Cross-reference and range checks; throws ConfigError.
  void validate(const RobotModel& model) const;
};

/// Strict parse: unknown keys and wrong types raise ConfigError naming the path.
ScenarioConfig parse_scenario(const nlohmann::json& doc);
ScenarioConfig load_scenario(const std::string& path);
nlohmann::json load_json_file(const std::string& path);

/// Default camera pair: base-mounted forward camera and an EE camera.
std::vector<DepthCameraSpec> default_cameras();

}  // namespace phtmpc
