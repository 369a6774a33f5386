#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "phtmpc/errors.hpp"
#include "phtmpc/scenario/batch.hpp"
#include "phtmpc/scenario/runner.hpp"

namespace fs = std::filesystem;
using namespace phtmpc;

namespace {

constexpr int kConfigError = 3;

int cmd_run(const std::string& scenario, std::uint64_t seed, const std::string& out) {
  const ScenarioConfig cfg = load_scenario(scenario);
  RunResult r = run_scenario(cfg, seed);
  fs::create_directories(out);
  r.log.write((fs::path(out) / "run.jsonl").string());
  std::ofstream csv(fs::path(out) / "metrics.csv");
  csv << metrics_csv_header() << '\n' << metrics_csv_row(r.metrics) << '\n';
  std::cout << r.metrics.trial << ": " << to_string(r.outcome) << ", path " << r.metrics.path_length
            << " m, min clearance " << r.metrics.min_clearance << " m\n";
  return exit_code(r.outcome);
}

int cmd_batch(const std::string& tmpl, const std::string& seeds, const std::string& grid_file,
              const std::string& out, bool logs) {
  const ScenarioConfig cfg = load_scenario(tmpl);
  const auto grid = parse_grid(load_json_file(grid_file));
  const auto seed_list = parse_seed_range(seeds);
  BatchOptions opt;
  opt.out_dir = out;
  opt.write_logs = logs;
  opt.progress = [](size_t done, size_t total, const MetricsRow& row) {
    std::cerr << "[" << done << "/" << total << "] " << row.trial << " " << row.end_reason << '\n';
  };
  const BatchResult res = run_batch(cfg, seed_list, grid, opt);
  std::cout << aggregate_csv_header() << '\n';
  for (const auto& a : res.aggregates) std::cout << aggregate_csv_row(a) << '\n';
  return 0;
}

int cmd_replay(const std::string& path, bool metrics) {
  const RunLog log = RunLog::read(path);
  if (metrics) {
    const MetricsRow row = compute_metrics(log);
    std::cout << metrics_csv_header() << '\n' << metrics_csv_row(row) << '\n';
  } else {
    std::cout << log.size() << " records\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical-task MPC with object-aware mapping: simulation runner"};
  app.require_subcommand(1);

  std::string scenario, out;
  std::uint64_t seed = 0;
  auto* run = app.add_subcommand("run", "Run one scenario");
  run->add_option("scenario", scenario, "Scenario file (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "Random seed")->default_val(0);
  run->add_option("--out", out, "Output directory")->required();

  std::string tmpl, seeds, grid, bout;
  bool logs = false;
  auto* batch = app.add_subcommand("batch", "Run a seed x parameter grid");
  batch->add_option("template", tmpl, "Scenario template (JSON)")->required()->check(CLI::ExistingFile);
  batch->add_option("--seeds", seeds, "Seed range a..b")->required();
  batch->add_option("--grid", grid, "Grid file (JSON)")->required()->check(CLI::ExistingFile);
  batch->add_option("--out", bout, "Output directory")->required();
  batch->add_flag("--logs", logs, "Also write one run log per trial");

  std::string runlog;
  bool metrics = false;
  auto* replay = app.add_subcommand("replay", "Recompute metrics from a run log");
  replay->add_option("runlog", runlog, "Run log (JSONL)")->required()->check(CLI::ExistingFile);
  replay->add_flag("--metrics", metrics, "Print the metrics row");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  try {
    if (*run) return cmd_run(scenario, seed, out);
    if (*batch) return cmd_batch(tmpl, seeds, grid, bout, logs);
    if (*replay) return cmd_replay(runlog, metrics);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
