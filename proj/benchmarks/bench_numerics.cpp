#include <benchmark/benchmark.h>

#include <random>

#include "vvlab/ops.hpp"

using namespace vvlab;

namespace {

Tensor gaussian(Shape shape, std::uint64_t seed) {
  Tensor t(std::move(shape));
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> n(0.0f, 1.0f);
  for (auto& x : t.values()) x = n(rng);
  return t;
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Tensor a = gaussian({65, n}, 1), b = gaussian({n, n}, 2);
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
  state.SetItemsProcessed(state.iterations() * 65 * n * n);
}
BENCHMARK(BM_Matmul)->Arg(64)->Arg(256)->Arg(768);

void BM_MatmulBackward(benchmark::State& state) {
  const Tensor a = gaussian({65, 64}, 1), b = gaussian({64, 256}, 2), g = gaussian({65, 256}, 3);
  for (auto _ : state) benchmark::DoNotOptimize(matmul_backward(a, b, g));
}
BENCHMARK(BM_MatmulBackward);

void BM_Softmax(benchmark::State& state) {
  const Tensor x = gaussian({65, 65}, 4);
  for (auto _ : state) benchmark::DoNotOptimize(softmax(x));
}
BENCHMARK(BM_Softmax);

void BM_LayerNorm(benchmark::State& state) {
  const Tensor x = gaussian({65, 64}, 5), gamma = gaussian({64}, 6), beta = gaussian({64}, 7);
  for (auto _ : state) benchmark::DoNotOptimize(layernorm(x, gamma, beta, 1e-5f));
}
BENCHMARK(BM_LayerNorm);

void BM_Gelu(benchmark::State& state) {
  const Tensor x = gaussian({65, 256}, 8);
  const auto variant = state.range(0) ? GeluVariant::Erf : GeluVariant::Tanh;
  for (auto _ : state) benchmark::DoNotOptimize(gelu(x, variant));
}
BENCHMARK(BM_Gelu)->Arg(0)->Arg(1);

}  // namespace

BENCHMARK_MAIN();
