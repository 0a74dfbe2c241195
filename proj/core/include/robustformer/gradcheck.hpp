#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "robustformer/rng.hpp"
#include "robustformer/tensor.hpp"

namespace rf {

/// A forward function paired with its vector-Jacobian product.
template <typename T>
struct DifferentiableOp {
  std::string name;
  std::function<Tensor<T>(const Tensor<T>&)> forward;
  /// (input, upstream gradient) -> gradient w.r.t. input
  std::function<Tensor<T>(const Tensor<T>&, const Tensor<T>&)> backward;
};

/// Compares the registered backward against central differences of the
/// scalar <g, op(x)> for a fixed random cotangent g. Returns
/// max_i |analytic_i - numeric_i| / max(|analytic_i|, |numeric_i|, 1e-5). The floor is
/// roughly the resolution of float64 central differences at eps = 1e-5, so
/// round-off on entries whose true gradient is zero does not read as error.
template <typename T>
double check_gradient(const DifferentiableOp<T>& op, const Tensor<T>& x, double eps,
                      std::uint64_t seed = 0x5eed) {
  if (!op.forward) throw ContractError("check_gradient: '" + op.name + "' has no forward");
  if (!op.backward) {
    throw ContractError("check_gradient: no backward registered for '" + op.name + "'");
  }
  const Tensor<T> y = op.forward(x);
  Tensor<T> cotangent(y.shape());
  Rng rng(seed, "gradcheck");
  for (auto& v : cotangent.data()) v = static_cast<T>(rng.uniform(-1.0, 1.0));
  const Tensor<T> analytic = op.backward(x, cotangent);
  expect_shape(analytic, x.shape(), "check_gradient analytic gradient");

  auto objective = [&](const Tensor<T>& input) {
    const Tensor<T> out = op.forward(input);
    double acc = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) {
      acc += static_cast<double>(cotangent[i]) * static_cast<double>(out[i]);
    }
    return acc;
  };

  double worst = 0.0;
  Tensor<T> probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const T original = probe[i];
    probe[i] = static_cast<T>(original + eps);
    const double up = objective(probe);
    probe[i] = static_cast<T>(original - eps);
    const double down = objective(probe);
    probe[i] = original;
    const double numeric = (up - down) / (2.0 * eps);
    const double a = static_cast<double>(analytic[i]);
    const double denom = std::max({std::abs(a), std::abs(numeric), 1e-5});
    worst = std::max(worst, std::abs(a - numeric) / denom);
  }
  return worst;
}

}  // namespace rf
