#include "phtmpc/scenario/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "phtmpc/errors.hpp"
#include "phtmpc/sim/ground_truth.hpp"

namespace phtmpc {

using nlohmann::json;

namespace {

const double kNaN = std::numeric_limits<double>::quiet_NaN();

double base_height(const RobotModel& model) {
  for (const auto& s : model.spheres) {
    if (s.frame == "base") return s.offset.z();
  }
  return 0.0;
}

VecX to_vec(const json& a) {
  VecX v(static_cast<Eigen::Index>(a.size()));
  for (size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = a[i].get<double>();
  return v;
}

WorldState world_from_record(const json& r) {
  WorldState w;
  w.time = r.at("t").get<double>();
  for (const auto& b : r.at("boxes")) {
    BoxObject box;
    box.id = b.at(0).get<int>();
    box.x = b.at(1).get<double>();
    box.y = b.at(2).get<double>();
    box.yaw = b.at(3).get<double>();
    box.size = Vec3(b.at(4).get<double>(), b.at(5).get<double>(), b.at(6).get<double>());
    box.level = b.at(7).get<int>();
    w.boxes.push_back(box);
  }
  return w;
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

}  // namespace

MetricSample sample_metrics(const WorldState& world, const RobotModel& model, const VecX& q, const VecX& v) {
  MetricSample s;
  s.clearance = whole_body_clearance(world, model, q).value;
  Vec3 grad = Vec3::Zero();
  const Vec3 p(q(0), q(1), base_height(model));
  s.base_distance = ground_truth_distance(world, p, &grad) - model.base_radius();
  const double n = grad.norm();
  if (n > 1e-12) s.approach = -Vec3(v(0), v(1), 0.0).dot(grad / n);
  return s;
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) return kNaN;
  std::sort(values.begin(), values.end());
  const auto rank = static_cast<size_t>(std::ceil(p / 100.0 * static_cast<double>(values.size())));
  return values[std::clamp<size_t>(rank, 1, values.size()) - 1];
}

MetricsRow compute_metrics(const RunLog& log) {
  const RobotModel model = RobotModel::reference();
  MetricsRow row;
  int n_subtasks = 0;
  const auto metas = log.channel("meta");
  if (metas.empty()) throw ConfigError("metrics: run log has no meta record");
  {
    const json& m = *metas.front();
    row.trial = m.value("trial", "");
    row.scenario = m.value("scenario", "");
    row.seed = m.value("seed", std::uint64_t{0});
    row.mapper = m.value("mapper", "");
    row.mode = m.value("mode", "");
    row.delta = m.value("delta", 0.0);
    row.gamma = m.contains("gamma") && m.at("gamma").is_number() ? m.at("gamma").get<double>() : kNaN;
    row.v_des = m.value("v_des", 0.0);
    n_subtasks = m.value("subtasks", 0);
    if (m.value("robot", "reference") != "reference") throw ConfigError("metrics: unknown robot model");
  }
  row.subtask_success.assign(static_cast<size_t>(n_subtasks), 0);
  row.subtask_path_length.assign(static_cast<size_t>(n_subtasks), 0.0);
  for (size_t b = 0; b + 1 < kApproachBinEdges.size(); ++b) {
    row.bins.push_back({kApproachBinEdges[b], kApproachBinEdges[b + 1], 0, 0.0, 0.0, 0.0});
  }
  std::vector<std::vector<double>> bin_samples(row.bins.size());

  // Walk the log in record order so world changes and subtask boundaries
  // apply to the states that follow them.
  WorldState world;
  bool have_world = false;
  int active = n_subtasks > 0 ? 0 : -1;
  bool have_prev = false;
  Vec2 prev = Vec2::Zero();
  row.min_clearance = std::numeric_limits<double>::infinity();
  row.min_h = std::numeric_limits<double>::infinity();
  row.completion_time = kNaN;
  for (const auto& r : log.records()) {
    const std::string ch = r.at("ch").get<std::string>();
    const double t = r.at("t").get<double>();
    if (ch == "world") {
      world = world_from_record(r);
      have_world = true;
    } else if (ch == "task") {
      const int i = r.at("subtask").get<int>();
      const std::string status = r.at("status").get<std::string>();
      if (status == "start") active = i;
      if (status == "success" && i >= 0 && i < n_subtasks) {
        row.subtask_success[static_cast<size_t>(i)] = 1;
        active = -1;
      }
    } else if (ch == "solver") {
      if (r.contains("h_min") && r.at("h_min").is_number()) row.min_h = std::min(row.min_h, r.at("h_min").get<double>());
    } else if (ch == "state") {
      if (!have_world) throw ConfigError("metrics: state record before any world record");
      const VecX q = to_vec(r.at("q"));
      const VecX v = to_vec(r.at("v"));
      const MetricSample s = sample_metrics(world, model, q, v);
      ++row.samples;
      row.clearance_samples.push_back(s.clearance);
      row.min_clearance = std::min(row.min_clearance, s.clearance);
      row.max_base_speed = std::max(row.max_base_speed, std::hypot(v(0), v(1)));
      for (size_t b = 0; b < row.bins.size(); ++b) {
        if (s.base_distance >= row.bins[b].lo && s.base_distance < row.bins[b].hi) bin_samples[b].push_back(s.approach);
      }
      if (s.base_distance < kNearDistance) row.near_samples.push_back(s.approach);
      const Vec2 p(q(0), q(1));
      if (have_prev) {
        const double step = (p - prev).norm();
        row.path_length += step;
        if (active >= 0 && active < n_subtasks) row.subtask_path_length[static_cast<size_t>(active)] += step;
      }
      prev = p;
      have_prev = true;
    } else if (ch == "end") {
      row.end_reason = r.at("reason").get<std::string>();
      row.completed = row.end_reason == "completed";
      if (row.completed) row.completion_time = t;
    }
  }
  if (row.samples == 0) row.min_clearance = kNaN;
  if (!std::isfinite(row.min_h)) row.min_h = kNaN;
  row.collision_free = row.samples == 0 || row.min_clearance > 0.0;
  for (size_t b = 0; b < row.bins.size(); ++b) {
    auto& bin = row.bins[b];
    const auto& s = bin_samples[b];
    bin.count = static_cast<int>(s.size());
    if (s.empty()) {
      bin.mean = bin.p95 = bin.max = kNaN;
      continue;
    }
    double sum = 0.0;
    for (double x : s) sum += x;
    bin.mean = sum / static_cast<double>(s.size());
    bin.p95 = percentile(s, 95.0);
    bin.max = *std::max_element(s.begin(), s.end());
  }
  row.approach_p95_near = percentile(row.near_samples, 95.0);
  return row;
}

std::string metrics_csv_header() {
  std::string h =
      "trial,scenario,seed,mapper,mode,delta,gamma,v_des,completed,collision_free,end_reason,min_clearance,"
      "path_length,completion_time,min_h,max_base_speed,samples,subtask_success,subtask_path_length,"
      "approach_p95_near";
  for (size_t b = 0; b + 1 < kApproachBinEdges.size(); ++b) {
    const std::string tag = "approach_" + fmt(kApproachBinEdges[b]) + "_" + fmt(kApproachBinEdges[b + 1]);
    h += "," + tag + "_count," + tag + "_mean," + tag + "_p95," + tag + "_max";
  }
  return h;
}

std::string metrics_csv_row(const MetricsRow& r) {
  std::ostringstream os;
  std::string flags, lengths;
  for (size_t i = 0; i < r.subtask_success.size(); ++i) {
    flags += (i ? ";" : "") + std::to_string(r.subtask_success[i]);
    lengths += (i ? ";" : "") + fmt(r.subtask_path_length[i]);
  }
  os << r.trial << ',' << r.scenario << ',' << r.seed << ',' << r.mapper << ',' << r.mode << ',' << fmt(r.delta) << ','
     << fmt(r.gamma) << ',' << fmt(r.v_des) << ',' << (r.completed ? 1 : 0) << ',' << (r.collision_free ? 1 : 0) << ','
     << r.end_reason << ',' << fmt(r.min_clearance) << ',' << fmt(r.path_length) << ',' << fmt(r.completion_time)
     << ',' << fmt(r.min_h) << ',' << fmt(r.max_base_speed) << ',' << r.samples << ',' << flags << ',' << lengths
     << ',' << fmt(r.approach_p95_near);
  for (const auto& b : r.bins) {
    os << ',' << b.count << ',' << fmt(b.mean) << ',' << fmt(b.p95) << ',' << fmt(b.max);
  }
  return os.str();
}

int count_phantoms(const std::vector<Vec3>& occupied_points, const WorldState& world, double voxel_size,
                   double stale_distance, int min_cluster) {
  std::map<std::array<long, 3>, int> stale;
  for (const auto& p : occupied_points) {
    if (ground_truth_distance(world, p) <= stale_distance) continue;
    const std::array<long, 3> key{std::lround(p.x() / voxel_size), std::lround(p.y() / voxel_size),
                                  std::lround(p.z() / voxel_size)};
    stale.emplace(key, 0);
  }
  int clusters = 0;
  int label = 0;
  for (auto& [key, lab] : stale) {
    if (lab != 0) continue;
    ++label;
    int size = 0;
    std::vector<std::array<long, 3>> stack{key};
    lab = label;
    while (!stack.empty()) {
      const auto c = stack.back();
      stack.pop_back();
      ++size;
      for (long dz = -1; dz <= 1; ++dz)
        for (long dy = -1; dy <= 1; ++dy)
          for (long dx = -1; dx <= 1; ++dx) {
            auto it = stale.find({c[0] + dx, c[1] + dy, c[2] + dz});
            if (it != stale.end() && it->second == 0) {
              it->second = label;
              stack.push_back(it->first);
            }
          }
    }
    if (size >= min_cluster) ++clusters;
  }
  return clusters;
}

}  // namespace phtmpc
