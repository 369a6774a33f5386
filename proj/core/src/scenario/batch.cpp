#include "phtmpc/scenario/batch.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "phtmpc/errors.hpp"
#include "phtmpc/scenario/runner.hpp"

namespace phtmpc {

using nlohmann::json;

namespace {

const double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<double> number_list(const json& doc, const std::string& key, std::vector<double> fallback) {
  if (!doc.contains(key)) return fallback;
  const auto& a = doc.at(key);
  if (!a.is_array() || a.empty()) throw ConfigError("grid: '" + key + "' must be a non-empty array");
  std::vector<double> out;
  for (const auto& v : a) {
    if (!v.is_number()) throw ConfigError("grid: '" + key + "' must contain numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

SafetyMode parse_mode(const json& v) {
  if (v == "cbf") return SafetyMode::CBF;
  if (v == "edf") return SafetyMode::EDF;
  throw ConfigError("grid: mode must be cbf or edf");
}

MapperKind parse_mapper(const json& v) {
  if (v == "object") return MapperKind::Object;
  if (v == "voxel") return MapperKind::Voxel;
  if (v == "ground_truth") return MapperKind::GroundTruth;
  throw ConfigError("grid: mapper must be object, voxel or ground_truth");
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

}  // namespace

std::vector<GridCell> parse_grid(const json& doc) {
  if (!doc.is_object()) throw ConfigError("grid: expected an object");
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    static const std::set<std::string> known{"mode", "gamma", "delta", "v_des", "mapper", "cells"};
    if (!known.count(it.key())) throw ConfigError("grid: unknown key '" + it.key() + "'");
  }
  std::vector<std::pair<SafetyMode, double>> safety;
  if (doc.contains("cells")) {
    if (doc.contains("mode") || doc.contains("gamma")) throw ConfigError("grid: 'cells' excludes 'mode' and 'gamma'");
    for (const auto& c : doc.at("cells")) {
      if (!c.is_object() || !c.contains("mode")) throw ConfigError("grid: each cell needs a mode");
      const SafetyMode m = parse_mode(c.at("mode"));
      const double g = c.contains("gamma") ? c.at("gamma").get<double>() : 1.0;
      safety.emplace_back(m, g);
    }
  } else {
    std::vector<SafetyMode> modes;
    if (doc.contains("mode")) {
      for (const auto& m : doc.at("mode")) modes.push_back(parse_mode(m));
    } else {
      modes.push_back(SafetyMode::CBF);
    }
    const auto gammas = number_list(doc, "gamma", {1.0});
    for (const auto m : modes) {
      if (m == SafetyMode::EDF) {
        safety.emplace_back(m, gammas.front());
        continue;
      }
      for (double g : gammas) safety.emplace_back(m, g);
    }
  }
  std::vector<MapperKind> mappers;
  if (doc.contains("mapper")) {
    for (const auto& m : doc.at("mapper")) mappers.push_back(parse_mapper(m));
  } else {
    mappers.push_back(MapperKind::Object);
  }
  const auto deltas = number_list(doc, "delta", {0.1});
  const auto speeds = number_list(doc, "v_des", {0.5});
  std::vector<GridCell> cells;
  for (const auto mapper : mappers)
    for (const auto& [mode, gamma] : safety)
      for (double d : deltas)
        for (double v : speeds) cells.push_back({mapper, mode, gamma, d, v});
  if (cells.empty()) throw ConfigError("grid: no cells");
  return cells;
}

std::vector<std::uint64_t> parse_seed_range(const std::string& text) {
  auto to_u64 = [&](const std::string& s) -> std::uint64_t {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
      throw ConfigError("seeds: '" + text + "' is not of the form a..b");
    }
    return std::stoull(s);
  };
  const auto dots = text.find("..");
  if (dots == std::string::npos) return {to_u64(text)};
  const std::uint64_t a = to_u64(text.substr(0, dots)), b = to_u64(text.substr(dots + 2));
  if (b < a) throw ConfigError("seeds: empty range '" + text + "'");
  std::vector<std::uint64_t> out;
  for (std::uint64_t s = a; s <= b; ++s) out.push_back(s);
  return out;
}

ScenarioConfig apply_cell(const ScenarioConfig& base, const GridCell& cell) {
  ScenarioConfig cfg = base;
  cfg.mapper = cell.mapper;
  cfg.safety.mode = cell.mode;
  if (cell.mode == SafetyMode::CBF) cfg.safety.gamma = cell.gamma;
  cfg.safety.delta_safe = cell.delta;
  cfg.tasks.v_des = cell.v_des;
  return cfg;
}

BatchResult run_batch(const ScenarioConfig& base, const std::vector<std::uint64_t>& seeds,
                      const std::vector<GridCell>& grid, const BatchOptions& options) {
  BatchResult out;
  namespace fs = std::filesystem;
  if (!options.out_dir.empty()) {
    fs::create_directories(options.out_dir);
    if (options.write_logs) fs::create_directories(fs::path(options.out_dir) / "runs");
  }
  const size_t total = seeds.size() * grid.size();
  for (const auto seed : seeds) {
    for (const auto& cell : grid) {
      const ScenarioConfig cfg = apply_cell(base, cell);
      std::string trial = cfg.name + "-s" + std::to_string(seed) + "-" + to_string(cell.mapper) + "-" +
                          to_string(cell.mode) + (cell.mode == SafetyMode::CBF ? "-g" + fmt(cell.gamma) : "") +
                          "-d" + fmt(cell.delta) + "-v" + fmt(cell.v_des);
      MetricsRow row;
      try {
        RunResult r = run_scenario(cfg, seed, trial);
        row = std::move(r.metrics);
        if (options.write_logs && !options.out_dir.empty()) {
          r.log.write((fs::path(options.out_dir) / "runs" / (trial + ".jsonl")).string());
        }
      } catch (const std::exception& e) {
        row = MetricsRow{};
        row.trial = trial;
        row.scenario = cfg.name;
        row.seed = seed;
        row.mapper = to_string(cell.mapper);
        row.mode = to_string(cell.mode);
        row.delta = cell.delta;
        row.gamma = cell.mode == SafetyMode::CBF ? cell.gamma : kNaN;
        row.v_des = cell.v_des;
        row.completed = false;
        row.collision_free = false;
        std::string msg = e.what();
        for (auto& c : msg) {
          if (c == ',' || c == '\n') c = ' ';
        }
        row.end_reason = "error: " + msg;
        row.min_clearance = row.path_length = row.completion_time = row.min_h = row.approach_p95_near = kNaN;
      }
      out.rows.push_back(std::move(row));
      if (options.progress) options.progress(out.rows.size(), total, out.rows.back());
    }
  }
  out.aggregates = aggregate(out.rows);
  if (!options.out_dir.empty()) {
    std::ofstream m(fs::path(options.out_dir) / "metrics.csv");
    m << metrics_csv_header() << '\n';
    for (const auto& r : out.rows) m << metrics_csv_row(r) << '\n';
    std::ofstream a(fs::path(options.out_dir) / "aggregate.csv");
    a << aggregate_csv_header() << '\n';
    for (const auto& r : out.aggregates) a << aggregate_csv_row(r) << '\n';
  }
  return out;
}

std::vector<AggregateRow> aggregate(const std::vector<MetricsRow>& rows) {
  // Key order: mapper, mode, delta, gamma, v_des (NaN gamma sorts as -inf).
  using Key = std::tuple<std::string, std::string, double, double, double>;
  auto gamma_key = [](double g) { return std::isnan(g) ? -std::numeric_limits<double>::infinity() : g; };
  std::map<Key, std::vector<const MetricsRow*>> groups;
  const double pooled = std::numeric_limits<double>::infinity();
  for (const auto& r : rows) {
    groups[{r.mapper, r.mode, r.delta, gamma_key(r.gamma), r.v_des}].push_back(&r);
    groups[{r.mapper, r.mode, r.delta, gamma_key(r.gamma), pooled}].push_back(&r);
  }
  std::vector<AggregateRow> out;
  for (const auto& [key, members] : groups) {
    AggregateRow a;
    a.mapper = std::get<0>(key);
    a.mode = std::get<1>(key);
    a.delta = std::get<2>(key);
    a.gamma = std::isinf(std::get<3>(key)) ? kNaN : std::get<3>(key);
    if (!std::isinf(std::get<4>(key))) a.v_des = std::get<4>(key);
    std::vector<double> near;
    double clear_sum = 0.0, len_sum = 0.0, time_sum = 0.0;
    int ok = 0, completed = 0, free = 0;
    a.min_min_clearance = std::numeric_limits<double>::infinity();
    a.min_h = std::numeric_limits<double>::infinity();
    for (const auto* r : members) {
      ++a.trials;
      if (r->end_reason.rfind("error", 0) == 0) {
        ++a.errors;
        continue;
      }
      ++ok;
      completed += r->completed ? 1 : 0;
      free += r->collision_free ? 1 : 0;
      clear_sum += r->min_clearance;
      a.min_min_clearance = std::min(a.min_min_clearance, r->min_clearance);
      len_sum += r->path_length;
      if (r->completed) time_sum += r->completion_time;
      if (!std::isnan(r->min_h)) a.min_h = std::min(a.min_h, r->min_h);
      near.insert(near.end(), r->near_samples.begin(), r->near_samples.end());
    }
    a.completed_rate = ok ? static_cast<double>(completed) / ok : kNaN;
    a.collision_free_rate = ok ? static_cast<double>(free) / ok : kNaN;
    a.mean_min_clearance = ok ? clear_sum / ok : kNaN;
    if (!ok) a.min_min_clearance = kNaN;
    a.mean_path_length = ok ? len_sum / ok : kNaN;
    a.mean_completion_time = completed ? time_sum / completed : kNaN;
    if (!std::isfinite(a.min_h)) a.min_h = kNaN;
    a.p95_approach_near = percentile(near, 95.0);
    out.push_back(a);
  }
  return out;
}

std::string aggregate_csv_header() {
  return "mapper,mode,delta,gamma,v_des,trials,errors,completed_rate,collision_free_rate,mean_min_clearance,"
         "min_min_clearance,p95_approach_near,mean_path_length,mean_completion_time,min_h";
}

std::string aggregate_csv_row(const AggregateRow& a) {
  std::ostringstream os;
  os << a.mapper << ',' << a.mode << ',' << fmt(a.delta) << ',' << fmt(a.gamma) << ','
     << (a.v_des ? fmt(*a.v_des) : std::string("all")) << ',' << a.trials << ',' << a.errors << ','
     << fmt(a.completed_rate) << ',' << fmt(a.collision_free_rate) << ',' << fmt(a.mean_min_clearance) << ','
     << fmt(a.min_min_clearance) << ',' << fmt(a.p95_approach_near) << ',' << fmt(a.mean_path_length) << ','
     << fmt(a.mean_completion_time) << ',' << fmt(a.min_h);
  return os.str();
}

}  // namespace phtmpc
