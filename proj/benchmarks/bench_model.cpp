#include <benchmark/benchmark.h>

#include "robustformer/harness/config.hpp"
#include "robustformer/model.hpp"
#include "robustformer/rng.hpp"

namespace {

const char* kVariants[] = {"baseline", "RF-O", "RF-OA", "RF-C"};

rf::MaeModel<float> make_model(std::int64_t variant) {
  rf::RunConfig cfg;
  cfg.set("model.variant", kVariants[variant]);
  return rf::MaeModel<float>(rf::model_config_from(cfg), rf::Shape{1, 28, 28}, 1);
}

rf::Tensor<float> batch(std::size_t b) {
  rf::Tensor<float> x(rf::Shape{b, 1, 28, 28});
  rf::Rng rng(9, "bench/batch");
  for (auto& v : x.data()) v = static_cast<float>(rng.uniform());
  return x;
}

void BM_PretrainStep(benchmark::State& state) {
  const auto model = make_model(state.range(0));
  const auto x = batch(16);
  auto grads = rf::zeros_like(model.weights());
  rf::Rng rng(3, "bench/mask");
  for (auto _ : state) benchmark::DoNotOptimize(model.pretrain_loss(x, rng, &grads));
  state.SetLabel(kVariants[state.range(0)]);
}
BENCHMARK(BM_PretrainStep)->DenseRange(0, 3)->Unit(benchmark::kMillisecond);

void BM_FinetuneStep(benchmark::State& state) {
  const auto model = make_model(state.range(0));
  const auto x = batch(16);
  const std::vector<int> labels(16, 3);
  auto grads = rf::zeros_like(model.weights());
  for (auto _ : state) benchmark::DoNotOptimize(model.finetune_loss(x, labels, &grads));
  state.SetLabel(kVariants[state.range(0)]);
}
BENCHMARK(BM_FinetuneStep)->DenseRange(0, 3)->Unit(benchmark::kMillisecond);

}  // namespace
