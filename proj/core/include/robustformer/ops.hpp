#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "robustformer/tensor.hpp"

namespace rf {

// Every differentiable operation below is paired with a hand-written
// vector-Jacobian product named `<op>_backward`. Callers compose them in
// reverse order; there is no tape.

/// result[..., i, ...] = sum_j m(i, j) * x[..., j, ...] along `axis`.
template <typename T>
Tensor<T> mode_product(const Tensor<T>& x, const Tensor<T>& m, std::size_t axis);
/// Gradient w.r.t. x of mode_product: the mode product with m transposed.
template <typename T>
Tensor<T> mode_product_backward(const Tensor<T>& grad, const Tensor<T>& m, std::size_t axis);

/// Max-shifted softmax along `axis`.
template <typename T>
Tensor<T> softmax(const Tensor<T>& x, std::size_t axis);
/// Takes the softmax output `y` and the upstream gradient.
template <typename T>
Tensor<T> softmax_backward(const Tensor<T>& y, const Tensor<T>& grad, std::size_t axis);

template <typename T>
Tensor<T> transpose(const Tensor<T>& m);
/// a (m x k) * b (k x n)
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);
/// a (m x k) * b^T where b is (n x k)
template <typename T>
Tensor<T> matmul_nt(const Tensor<T>& a, const Tensor<T>& b);
/// a^T * b where a is (k x m) and b is (k x n)
template <typename T>
Tensor<T> matmul_tn(const Tensor<T>& a, const Tensor<T>& b);
/// dst += a^T * b, shapes as in matmul_tn.
template <typename T>
void matmul_tn_accumulate(Tensor<T>& dst, const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> hadamard(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> scale(const Tensor<T>& a, T s);
/// dst += alpha * src
template <typename T>
void axpy(Tensor<T>& dst, T alpha, const Tensor<T>& src);
template <typename T>
void add_inplace(Tensor<T>& dst, const Tensor<T>& src) {
  axpy(dst, T{1}, src);
}

/// m(i, :) += v for every row.
template <typename T>
void add_row_vector(Tensor<T>& m, const Tensor<T>& v);
/// Sum over rows of a matrix; accumulated into `dst` when given.
template <typename T>
void column_sums_accumulate(Tensor<T>& dst, const Tensor<T>& m);

/// Linear layer y = x w + b with w of shape (in, out).
template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b);
/// Accumulates dw and db; returns dx.
template <typename T>
Tensor<T> linear_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& grad,
                          Tensor<T>& dw, Tensor<T>& db);

/// Selects rows of a matrix in the given order.
template <typename T>
Tensor<T> gather_rows(const Tensor<T>& m, std::span<const std::size_t> rows);
/// dst(rows[i], :) += src(i, :)
template <typename T>
void scatter_add_rows(Tensor<T>& dst, const Tensor<T>& src, std::span<const std::size_t> rows);

template <typename T>
struct LayerNormCache {
  Tensor<T> normalized;
  std::vector<T> inv_std;
};

/// Row-wise layer normalisation of a matrix.
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                     LayerNormCache<T>* cache, T eps = T(1e-6));
/// Accumulates dgamma and dbeta; returns dx.
template <typename T>
Tensor<T> layer_norm_backward(const Tensor<T>& grad, const Tensor<T>& gamma,
                              const LayerNormCache<T>& cache, Tensor<T>& dgamma,
                              Tensor<T>& dbeta);

/// Exact (erf) GELU.
template <typename T>
Tensor<T> gelu(const Tensor<T>& x);
template <typename T>
Tensor<T> gelu_backward(const Tensor<T>& x, const Tensor<T>& grad);

/// Mean along `axis`; the axis is removed from the result shape.
template <typename T>
Tensor<T> mean(const Tensor<T>& x, std::size_t axis);
template <typename T>
Tensor<T> mean_backward(const Shape& input_shape, const Tensor<T>& grad, std::size_t axis);
/// Population variance along `axis`.
template <typename T>
Tensor<T> variance(const Tensor<T>& x, std::size_t axis);
template <typename T>
Tensor<T> variance_backward(const Tensor<T>& x, const Tensor<T>& grad, std::size_t axis);

/// Mean softmax cross-entropy over the rows of `logits`; writes d(loss)/d(logits)
/// into `grad` when non-null.
template <typename T>
T cross_entropy(const Tensor<T>& logits, std::span<const int> labels, Tensor<T>* grad);

/// Mean squared error over all entries; writes d(loss)/d(pred) when non-null.
template <typename T>
T mse(const Tensor<T>& pred, const Tensor<T>& target, Tensor<T>* grad);

}  // namespace rf
