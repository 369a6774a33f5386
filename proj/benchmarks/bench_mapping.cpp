#include <benchmark/benchmark.h>

#include <random>

#include "phtmpc/mapping/consistency.hpp"
#include "phtmpc/mapping/edt.hpp"
#include "phtmpc/mapping/local_edf.hpp"

using namespace phtmpc;

namespace {

void BM_SquaredEdt(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Index3 dims{n, n, n};
  std::vector<std::uint8_t> mask(static_cast<size_t>(n) * n * n, 0);
  std::mt19937_64 rng(1);
  std::bernoulli_distribution occ(0.02);
  for (auto& m : mask) m = occ(rng);
  for (auto _ : state) {
    auto d = squared_edt(mask, dims);
    benchmark::DoNotOptimize(d.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(mask.size()));
}
BENCHMARK(BM_SquaredEdt)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

ObservationSegment cube_segment(double x, double y) {
  std::vector<Vec3> pts;
  for (int i = 0; i <= 12; ++i)
    for (int j = 0; j <= 12; ++j) {
      const double a = -0.3 + 0.05 * i, b = -0.3 + 0.05 * j;
      pts.emplace_back(x + a, y + b, 0.6);
      pts.emplace_back(x + a, y - 0.3, 0.3 + b);
      pts.emplace_back(x + a, y + 0.3, 0.3 + b);
      pts.emplace_back(x - 0.3, y + a, 0.3 + b);
      pts.emplace_back(x + 0.3, y + a, 0.3 + b);
    }
  return make_segment(std::move(pts));
}

void BM_LocalEdf(benchmark::State& state) {
  MapperConfig cfg;
  ObjectLibrary lib;
  for (int i = 0; i < state.range(0); ++i) {
    lib.objects.push_back(make_object(i + 1, cube_segment(0.5 + 1.0 * (i % 4), 0.5 + 1.0 * (i / 4)), cfg, 0.0));
  }
  for (auto _ : state) {
    auto g = build_local_edf(lib, Vec3(2.0, 1.0, 0.9), Vec3(2.0, 2.0, 0.9), cfg.theta_zero, cfg.theta_cutoff,
                             cfg.voxel_size);
    benchmark::DoNotOptimize(g.values().data());
  }
}
BENCHMARK(BM_LocalEdf)->Arg(2)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_BayesUpdate(benchmark::State& state) {
  ConsistencyConfig cfg;
  ConsistencyParams p{0.02, 0.1, 4.0, 3.0};
  double delta = 0.0;
  for (auto _ : state) {
    auto u = bayes_update(p, {delta, 0}, cfg);
    benchmark::DoNotOptimize(u.params.mu);
    delta = delta > 0.9 ? 0.0 : delta + 0.01;
  }
}
BENCHMARK(BM_BayesUpdate);

}  // namespace
BENCHMARK_MAIN();
