#include <benchmark/benchmark.h>

#include "peap/noise.hpp"
#include "peap/patchgrid.hpp"
#include "peap/render.hpp"
#include "peap/synth.hpp"
#include "peap/toyvit.hpp"

namespace peap {
namespace {

ExecPolicy policy_of(const benchmark::State& state) {
  return state.range(0) == 0 ? ExecPolicy::Serial : ExecPolicy::Parallel;
}

void BM_Noise(benchmark::State& state) {
  const PixelCanvas page = blank_page(1024, 1024);
  NoiseSpec n;
  n.kind = NoiseKind::HighFreqGaussian;
  n.amplitude = 8;
  n.seed = 1;
  for (auto _ : state) benchmark::DoNotOptimize(apply_noise(page, n, policy_of(state)));
  state.SetLabel(state.range(0) == 0 ? "serial" : "parallel");
}
BENCHMARK(BM_Noise)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_PatchVariances(benchmark::State& state) {
  RenderSpec spec;
  spec.width_min = 1024;
  const PatchGrid grid = tile(render_text(random_paragraph(600, 3), spec));
  for (auto _ : state) benchmark::DoNotOptimize(patch_variances(grid, policy_of(state)));
  state.SetLabel(state.range(0) == 0 ? "serial" : "parallel");
}
BENCHMARK(BM_PatchVariances)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

ToyViTConfig bench_model() {
  ToyViTConfig cfg;
  cfg.embed_dim = 64;
  cfg.heads = 4;
  cfg.layers = 2;
  cfg.patch_size = 8;
  cfg.seed = 5;
  return cfg;
}

void BM_Forward(benchmark::State& state) {
  const ToyViT model(bench_model());
  const Tokens tokens = Tokens::from(tile(textured_grid(32, 32, 8, 1.0, 7), 8));
  ForwardOptions o;
  o.policy = policy_of(state);
  for (auto _ : state) benchmark::DoNotOptimize(model.forward(tokens, o));
  state.SetLabel(state.range(0) == 0 ? "serial" : "parallel");
}
BENCHMARK(BM_Forward)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

// Full grid versus the pruned sequence at retained ratio range(0) / 100.
void BM_ForwardPruned(benchmark::State& state) {
  const ToyViT model(bench_model());
  const double ratio = static_cast<double>(state.range(0)) / 100.0;
  const PatchGrid grid = tile(textured_grid(32, 32, 8, ratio, 7), 8);
  const PatchMask mask = blank_mask(grid, PruneConfig{});
  const Tokens tokens = Tokens::from(prune(grid, mask));
  for (auto _ : state) benchmark::DoNotOptimize(model.forward(tokens));
  state.counters["tokens"] = static_cast<double>(tokens.size());
}
BENCHMARK(BM_ForwardPruned)->Arg(100)->Arg(75)->Arg(50)->Arg(25)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace peap

BENCHMARK_MAIN();
