#include <benchmark/benchmark.h>

#include "phtmpc/control/htmpc.hpp"
#include "phtmpc/sim/ground_truth.hpp"

using namespace phtmpc;

namespace {

struct Fixture {
  RobotModel model = RobotModel::reference();
  VoxelGrid edf;
  HtmpcContext ctx;
  VecX x0;
  TaskStack stack;

  Fixture() {
    WorldState w;
    for (int i = 0; i < 4; ++i) {
      BoxObject b;
      b.id = i + 1;
      b.x = 1.2 + 0.9 * i;
      b.y = (i % 2 ? 0.8 : -0.8);
      w.boxes.push_back(b);
    }
    edf = ground_truth_edf(w, Region{Vec3(-1.5, -2.5, 0.0), Vec3(2.5, 2.5, 1.8)}, 0.1, 1.5);
    ctx.model = &model;
    ctx.edf = &edf;
    ctx.safety.self_pairs = SafetySpec::default_self_pairs(model);
    x0 = VecX::Zero(2 * model.dof());
    x0.head(model.dof()) = model.home;
    stack = {make_base_task(ReferenceTrajectory::constant("base", Pose3::planar(1.5, 0.0, 0.0))),
             make_frame_task("ee", "ee", ReferenceTrajectory::constant("ee", Pose3::planar(2.0, 0.3, 0.0)))};
  }
};

void BM_FirstTaskQp(benchmark::State& state) {
  Fixture f;
  const std::vector<VecX> guess(static_cast<size_t>(f.ctx.config.nodes + 1), f.x0);
  const auto p = build_stmpc(0, f.stack, {}, f.ctx, f.x0, guess, 0.0);
  for (auto _ : state) {
    auto r = solve_qp(p.qp);
    benchmark::DoNotOptimize(r.z.data());
  }
  state.counters["vars"] = static_cast<double>(p.layout.size());
}
BENCHMARK(BM_FirstTaskQp)->Unit(benchmark::kMillisecond);

void BM_BuildStmpc(benchmark::State& state) {
  Fixture f;
  const std::vector<VecX> guess(static_cast<size_t>(f.ctx.config.nodes + 1), f.x0);
  for (auto _ : state) {
    auto p = build_stmpc(0, f.stack, {}, f.ctx, f.x0, guess, 0.0);
    benchmark::DoNotOptimize(p.h_min);
  }
}
BENCHMARK(BM_BuildStmpc)->Unit(benchmark::kMillisecond);

void BM_HtmpcCycle(benchmark::State& state) {
  Fixture f;
  f.ctx.config.sqp_iterations = static_cast<int>(state.range(0));
  for (auto _ : state) {
    auto s = solve_htmpc(f.stack, f.x0, 0.0, f.ctx);
    benchmark::DoNotOptimize(s.ok);
  }
}
BENCHMARK(BM_HtmpcCycle)->Arg(1)->Arg(3)->Unit(benchmark::kMillisecond);

}  // namespace
