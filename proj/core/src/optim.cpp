#include "robustformer/optim.hpp"

#include <cmath>
#include <numbers>

namespace rf {

double LrSchedule::at(std::size_t step) const {
  if (warmup_steps > 0 && step < warmup_steps) {
    return base_lr * static_cast<double>(step + 1) / static_cast<double>(warmup_steps);
  }
  const std::size_t span = total_steps > warmup_steps ? total_steps - warmup_steps : 1;
  const double progress = std::min(1.0, static_cast<double>(step - warmup_steps) / static_cast<double>(span));
  return min_lr + 0.5 * (base_lr - min_lr) * (1.0 + std::cos(std::numbers::pi * progress));
}

template <typename T>
void adamw_update(Tensor<T>& w, const Tensor<T>& g, Tensor<T>& m, Tensor<T>& v, double lr,
                  const AdamWConfig& cfg, std::uint64_t step, bool decay) {
  if (w.shape() != g.shape() || w.shape() != m.shape() || w.shape() != v.shape()) {
    throw ShapeError("adamw_update: weight " + shape_string(w.shape()) + " gradient " +
                     shape_string(g.shape()));
  }
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
  const double shrink = decay ? 1.0 - lr * cfg.weight_decay : 1.0;
  auto wd = w.data();
  auto gd = g.data();
  auto md = m.data();
  auto vd = v.data();
  for (std::size_t i = 0; i < wd.size(); ++i) {
    const double gi = gd[i];
    const double mi = cfg.beta1 * md[i] + (1.0 - cfg.beta1) * gi;
    const double vi = cfg.beta2 * vd[i] + (1.0 - cfg.beta2) * gi * gi;
    md[i] = static_cast<T>(mi);
    vd[i] = static_cast<T>(vi);
    const double update = (mi / c1) / (std::sqrt(vi / c2) + cfg.eps);
    wd[i] = static_cast<T>(wd[i] * shrink - lr * update);
  }
}

template <typename T>
void adamw_step(ModelWeights<T>& w, const ModelWeights<T>& grads, AdamWState<T>& state, double lr,
                const AdamWConfig& cfg) {
  ++state.step;
  auto params = w.parameters();
  const auto gs = grads.parameters();
  auto ms = state.m.parameters();
  auto vs = state.v.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor<T>& p = *params[i].second;
    adamw_update(p, *gs[i].second, *ms[i].second, *vs[i].second, lr, cfg, state.step, p.rank() >= 2);
  }
}

#define RF_INSTANTIATE_OPTIM(T)                                                                   \
  template void adamw_update(Tensor<T>&, const Tensor<T>&, Tensor<T>&, Tensor<T>&, double,        \
                             const AdamWConfig&, std::uint64_t, bool);                             \
  template void adamw_step(ModelWeights<T>&, const ModelWeights<T>&, AdamWState<T>&, double,       \
                           const AdamWConfig&);

RF_INSTANTIATE_OPTIM(float)
RF_INSTANTIATE_OPTIM(double)

#undef RF_INSTANTIATE_OPTIM

}  // namespace rf
