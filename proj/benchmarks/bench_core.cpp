#include <benchmark/benchmark.h>

#include <vector>

#include "hybridmeas/dynamics.hpp"
#include "hybridmeas/fock.hpp"
#include "hybridmeas/metrology.hpp"
#include "hybridmeas/wigner.hpp"

using namespace hybridmeas;

namespace {

ProtocolParams point(double t1, double t2) {
  ProtocolParams p;
  p.kappa = 1.0;
  p.gamma = 1.0;
  p.t1 = t1;
  p.t2 = t2;
  return p;
}

const WignerGrid& post_click() {
  static const WignerGrid w = post_click_wigner(evolve_protocol(point(0.05, 0.01)));
  return w;
}

}  // namespace

static void BM_AiryAi(benchmark::State& state) {
  std::vector<double> z;
  for (int i = 0; i < 1000; ++i) z.push_back(-12.0 + 20.0 * i / 999.0);
  for (auto _ : state) {
    double sum = 0.0;
    for (double v : z) sum += airy_ai(v);
    benchmark::DoNotOptimize(sum);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(z.size()));
}
BENCHMARK(BM_AiryAi);

static void BM_PhiWignerGrid(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  GridSpec spec;
  spec.x = {-4.0, 4.0, n};
  spec.p = spec.x;
  for (auto _ : state) benchmark::DoNotOptimize(phi_wigner({0.125}, spec));
}
BENCHMARK(BM_PhiWignerGrid)->Arg(101)->Arg(201)->Unit(benchmark::kMillisecond);

static void BM_EvolveProtocol(benchmark::State& state) {
  const ProtocolParams p = point(0.5, 0.2);
  for (auto _ : state) benchmark::DoNotOptimize(evolve_protocol(p));
}
BENCHMARK(BM_EvolveProtocol)->Unit(benchmark::kMicrosecond);

static void BM_PostClickWigner(benchmark::State& state) {
  const PreClickState s = evolve_protocol(point(0.05, 0.01));
  for (auto _ : state) benchmark::DoNotOptimize(post_click_wigner(s));
}
BENCHMARK(BM_PostClickWigner)->Unit(benchmark::kMillisecond);

static void BM_CfiHomodyne(benchmark::State& state) {
  const WignerGrid& w = post_click();
  for (auto _ : state) benchmark::DoNotOptimize(cfi_homodyne(w));
}
BENCHMARK(BM_CfiHomodyne)->Unit(benchmark::kMillisecond);

static void BM_CfiPhiKernel(benchmark::State& state) {
  const PreClickState s = evolve_protocol(point(0.05, 0.01));
  for (auto _ : state) benchmark::DoNotOptimize(cfi_phi_subtracted(s.pre_click, s.bopp_damping));
}
BENCHMARK(BM_CfiPhiKernel)->Unit(benchmark::kMillisecond);

static void BM_ReconstructAuto(benchmark::State& state) {
  const WignerGrid& w = post_click();
  for (auto _ : state) benchmark::DoNotOptimize(reconstruct_auto(w));
}
BENCHMARK(BM_ReconstructAuto)->Unit(benchmark::kMillisecond);

static void BM_Eigh(benchmark::State& state) {
  const FockDensityMatrix rho = reconstruct_auto(post_click());
  for (auto _ : state) benchmark::DoNotOptimize(eigh(rho));
  state.counters["dim"] = rho.dim;
}
BENCHMARK(BM_Eigh)->Unit(benchmark::kMillisecond);

static void BM_TotalTimeCurve(benchmark::State& state) {
  ProtocolParams p = point(0.0, 0.0);
  p.p_threshold = 0.2;
  std::vector<double> grid;
  for (int i = 0; i < 50; ++i) grid.push_back(0.002 * i);
  for (auto _ : state) benchmark::DoNotOptimize(total_time_curve(grid, p));
}
BENCHMARK(BM_TotalTimeCurve)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
