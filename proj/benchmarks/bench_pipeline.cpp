#include <benchmark/benchmark.h>

#include "vvlab/backprop.hpp"
#include "vvlab/causal.hpp"
#include "vvlab/model.hpp"
#include "vvlab/observe.hpp"
#include "vvlab/organism.hpp"

using namespace vvlab;

namespace {

// One strike/gutter pair of desk-scale inputs.
struct Fixture {
  model::ModelConfig config = model::desk_config();
  model::Weights weights = model::init_random(config, 0);
  Tensor strike, gutter;

  Fixture() {
    for (const auto& item : organism::build_dataset(2, config, 0, 0.02f, 40)) {
      const auto& clip = item.clip;
      if (clip.label != organism::kBowling) continue;
      Tensor v = organism::sample_frames(clip.video, config.frames, organism::kDefaultJitterSeed);
      (clip.outcome == organism::Outcome::Success ? strike : gutter) = std::move(v);
    }
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

void BM_Forward(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(model::forward(f.strike, f.weights, f.config));
}
BENCHMARK(BM_Forward)->Unit(benchmark::kMillisecond);

void BM_ForwardCaptureAll(benchmark::State& state) {
  const auto& f = fixture();
  const auto hooks = causal::patch_hooks(f.config);
  for (auto _ : state) benchmark::DoNotOptimize(model::forward(f.strike, f.weights, f.config, {}, hooks));
}
BENCHMARK(BM_ForwardCaptureAll)->Unit(benchmark::kMillisecond);

void BM_TrainStep(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(model::loss_and_gradient(f.strike, 0, f.weights, f.config));
}
BENCHMARK(BM_TrainStep)->Unit(benchmark::kMillisecond);

void BM_DlaAndTokens(benchmark::State& state) {
  const auto& f = fixture();
  const auto cache = model::forward(f.strike, f.weights, f.config, {}, observe::attribution_hooks(f.config)).cache;
  for (auto _ : state) {
    benchmark::DoNotOptimize(observe::dla_layerwise(cache, f.weights, f.config, 0));
    benchmark::DoNotOptimize(observe::token_contributions(cache, f.weights, f.config, 0));
  }
}
BENCHMARK(BM_DlaAndTokens)->Unit(benchmark::kMillisecond);

void BM_PatchSweep(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(causal::patch_sweep(f.strike, f.gutter, f.weights, f.config));
}
BENCHMARK(BM_PatchSweep)->Unit(benchmark::kMillisecond);

void BM_TopKAblation(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(causal::topk_ablation(f.strike, f.weights, f.config, 10.0, 0));
}
BENCHMARK(BM_TopKAblation)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
