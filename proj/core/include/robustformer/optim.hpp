#pragma once

#include <cstddef>
#include <cstdint>

#include "robustformer/model.hpp"
#include "robustformer/tensor.hpp"

namespace rf {

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.05;
};

/// Linear warmup to base_lr over warmup_steps, then cosine decay to min_lr at
/// total_steps. Steps are zero-based.
struct LrSchedule {
  double base_lr = 1e-3;
  std::size_t total_steps = 1;
  std::size_t warmup_steps = 0;
  double min_lr = 0.0;

  double at(std::size_t step) const;
};

/// One AdamW update of a single tensor. `step` is the 1-based update count
/// used for bias correction. Decay is decoupled: w -= lr * wd * w.
template <typename T>
void adamw_update(Tensor<T>& w, const Tensor<T>& g, Tensor<T>& m, Tensor<T>& v, double lr,
                  const AdamWConfig& cfg, std::uint64_t step, bool decay);

template <typename T>
struct AdamWState {
  ModelWeights<T> m;
  ModelWeights<T> v;
  std::uint64_t step = 0;

  static AdamWState zeros_for(const ModelWeights<T>& w) { return {zeros_like(w), zeros_like(w), 0}; }
};

/// Updates every parameter. Weight decay applies to matrices only (rank >= 2);
/// biases, layer-norm parameters and the mask token are not decayed.
template <typename T>
void adamw_step(ModelWeights<T>& w, const ModelWeights<T>& grads, AdamWState<T>& state, double lr,
                const AdamWConfig& cfg);

}  // namespace rf
