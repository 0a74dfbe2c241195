#include <benchmark/benchmark.h>

#include <array>

#include "robustformer/attention.hpp"
#include "robustformer/ops.hpp"
#include "robustformer/rng.hpp"
#include "robustformer/wavelet.hpp"

namespace {

rf::Tensor<float> random_tensor(rf::Shape shape, std::uint64_t seed) {
  rf::Tensor<float> t(std::move(shape));
  rf::Rng rng(seed, "bench");
  for (auto& v : t.data()) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  return t;
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_tensor({n, n}, 1), b = random_tensor({n, n}, 2);
  for (auto _ : state) benchmark::DoNotOptimize(rf::matmul(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(32)->Arg(64)->Arg(128)->Arg(256);

void BM_Dwt3d(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto x = random_tensor({n, n, n}, 3);
  const auto filter = rf::WaveletFilter::builtin(state.range(1) == 0 ? "haar" : "db2");
  for (auto _ : state) benchmark::DoNotOptimize(rf::dwt3d(x, std::array<std::size_t, 3>{0, 1, 2}, filter));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(x.size()));
}
BENCHMARK(BM_Dwt3d)->Args({16, 0})->Args({32, 0})->Args({16, 1})->Args({32, 1});

void BM_Idwt3d(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto filter = rf::WaveletFilter::builtin("haar");
  const auto bands = rf::dwt3d(random_tensor({n, n, n}, 4), std::array<std::size_t, 3>{0, 1, 2}, filter);
  for (auto _ : state) benchmark::DoNotOptimize(rf::idwt(bands, filter, rf::Boundary::zero));
}
BENCHMARK(BM_Idwt3d)->Arg(16)->Arg(32);

void BM_Attention(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  constexpr std::size_t kHeadDim = 64;
  rf::AttentionConfig cfg;
  cfg.head_dim = kHeadDim;
  cfg.variant = static_cast<rf::AttentionVariant>(state.range(1));
  const auto q = random_tensor({n, kHeadDim}, 5), k = random_tensor({n, kHeadDim}, 6), v = random_tensor({n, kHeadDim}, 7);
  for (auto _ : state) benchmark::DoNotOptimize(rf::attention_scores(q, k, v, cfg));
  state.SetLabel(std::string(rf::to_string(cfg.variant)));
}
BENCHMARK(BM_Attention)->ArgsProduct({{64, 196}, {0, 1, 2, 3}});

}  // namespace
