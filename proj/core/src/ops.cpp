#include "robustformer/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace rf {
namespace {

struct AxisSplit {
  std::size_t outer = 1;
  std::size_t extent = 1;
  std::size_t inner = 1;
};

template <typename T>
AxisSplit split_at(const Tensor<T>& x, std::size_t axis) {
  if (axis >= x.rank()) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " +
                     shape_string(x.shape()));
  }
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= x.shape()[i];
  s.extent = x.shape()[axis];
  for (std::size_t i = axis + 1; i < x.rank(); ++i) s.inner *= x.shape()[i];
  return s;
}

template <typename T>
void require_matrix(const Tensor<T>& m, const char* what) {
  if (m.rank() != 2) {
    throw ShapeError(std::string(what) + ": expected a matrix, got shape " + shape_string(m.shape()));
  }
}

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
  }
}

// c(m x n) += a(m x k) * b(k x n); the inner loop runs over contiguous n.
template <typename T>
void gemm_accumulate(T* c, const T* a, const T* b, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    T* crow = c + i * n;
    const T* arow = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = arow[p];
      const T* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

template <typename T>
Tensor<T> reduced_shape_tensor(const Tensor<T>& x, std::size_t axis) {
  Shape shape = x.shape();
  shape.erase(shape.begin() + static_cast<std::ptrdiff_t>(axis));
  return Tensor<T>(shape);
}

}  // namespace

template <typename T>
Tensor<T> mode_product(const Tensor<T>& x, const Tensor<T>& m, std::size_t axis) {
  require_matrix(m, "mode_product");
  const AxisSplit s = split_at(x, axis);
  if (m.dim(1) != s.extent) {
    throw ShapeError("mode_product: matrix " + shape_string(m.shape()) + " cannot act on axis " +
                     std::to_string(axis) + " of " + shape_string(x.shape()));
  }
  const std::size_t rows = m.dim(0);
  Shape shape = x.shape();
  shape[axis] = rows;
  Tensor<T> out(shape);
  const T* xd = x.data().data();
  T* od = out.data().data();
  for (std::size_t o = 0; o < s.outer; ++o) {
    const T* xs = xd + o * s.extent * s.inner;
    T* os = od + o * rows * s.inner;
    for (std::size_t i = 0; i < rows; ++i) {
      T* orow = os + i * s.inner;
      for (std::size_t j = 0; j < s.extent; ++j) {
        const T coeff = m.at(i, j);
        if (coeff == T{0}) continue;  // analysis matrices are banded
        const T* xrow = xs + j * s.inner;
        for (std::size_t q = 0; q < s.inner; ++q) orow[q] += coeff * xrow[q];
      }
    }
  }
  return out;
}

template <typename T>
Tensor<T> mode_product_backward(const Tensor<T>& grad, const Tensor<T>& m, std::size_t axis) {
  return mode_product(grad, transpose(m), axis);
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& x, std::size_t axis) {
  const AxisSplit s = split_at(x, axis);
  Tensor<T> out(x.shape());
  const T* xd = x.data().data();
  T* od = out.data().data();
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t q = 0; q < s.inner; ++q) {
      const std::size_t base = o * s.extent * s.inner + q;
      T mx = -std::numeric_limits<T>::infinity();
      for (std::size_t j = 0; j < s.extent; ++j) mx = std::max(mx, xd[base + j * s.inner]);
      T total = 0;
      for (std::size_t j = 0; j < s.extent; ++j) {
        const T e = std::exp(xd[base + j * s.inner] - mx);
        od[base + j * s.inner] = e;
        total += e;
      }
      const T inv = T{1} / total;
      for (std::size_t j = 0; j < s.extent; ++j) od[base + j * s.inner] *= inv;
    }
  }
  return out;
}

template <typename T>
Tensor<T> softmax_backward(const Tensor<T>& y, const Tensor<T>& grad, std::size_t axis) {
  require_same_shape(y, grad, "softmax_backward");
  const AxisSplit s = split_at(y, axis);
  Tensor<T> out(y.shape());
  const T* yd = y.data().data();
  const T* gd = grad.data().data();
  T* od = out.data().data();
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t q = 0; q < s.inner; ++q) {
      const std::size_t base = o * s.extent * s.inner + q;
      T dot = 0;
      for (std::size_t j = 0; j < s.extent; ++j) {
        dot += yd[base + j * s.inner] * gd[base + j * s.inner];
      }
      for (std::size_t j = 0; j < s.extent; ++j) {
        const std::size_t idx = base + j * s.inner;
        od[idx] = yd[idx] * (gd[idx] - dot);
      }
    }
  }
  return out;
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& m) {
  require_matrix(m, "transpose");
  const std::size_t r = m.dim(0), c = m.dim(1);
  Tensor<T> out(Shape{c, r});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out.at(j, i) = m.at(i, j);
  return out;
}

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  if (a.dim(1) != b.dim(0)) {
    throw ShapeError("matmul: " + shape_string(a.shape()) + " x " + shape_string(b.shape()));
  }
  Tensor<T> out(Shape{a.dim(0), b.dim(1)});
  gemm_accumulate(out.data().data(), a.data().data(), b.data().data(), a.dim(0), a.dim(1), b.dim(1));
  return out;
}

template <typename T>
Tensor<T> matmul_nt(const Tensor<T>& a, const Tensor<T>& b) {
  require_matrix(a, "matmul_nt");
  require_matrix(b, "matmul_nt");
  if (a.dim(1) != b.dim(1)) {
    throw ShapeError("matmul_nt: " + shape_string(a.shape()) + " x " + shape_string(b.shape()) + "^T");
  }
  // Materialising b^T keeps the vectorisable axpy inner loop.
  return matmul(a, transpose(b));
}

template <typename T>
void matmul_tn_accumulate(Tensor<T>& dst, const Tensor<T>& a, const Tensor<T>& b) {
  require_matrix(a, "matmul_tn");
  require_matrix(b, "matmul_tn");
  if (a.dim(0) != b.dim(0)) {
    throw ShapeError("matmul_tn: " + shape_string(a.shape()) + "^T x " + shape_string(b.shape()));
  }
  const std::size_t k = a.dim(0), m = a.dim(1), n = b.dim(1);
  expect_shape(dst, Shape{m, n}, "matmul_tn destination");
  T* c = dst.data().data();
  const T* ad = a.data().data();
  const T* bd = b.data().data();
  for (std::size_t p = 0; p < k; ++p) {
    const T* arow = ad + p * m;
    const T* brow = bd + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const T av = arow[i];
      T* crow = c + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

template <typename T>
Tensor<T> matmul_tn(const Tensor<T>& a, const Tensor<T>& b) {
  require_matrix(a, "matmul_tn");
  require_matrix(b, "matmul_tn");
  Tensor<T> out(Shape{a.dim(1), b.dim(1)});
  matmul_tn_accumulate(out, a, b);
  return out;
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "add");
  Tensor<T> out = a;
  axpy(out, T{1}, b);
  return out;
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "sub");
  Tensor<T> out = a;
  axpy(out, T{-1}, b);
  return out;
}

template <typename T>
Tensor<T> hadamard(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "hadamard");
  Tensor<T> out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b[i];
  return out;
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T s) {
  Tensor<T> out = a;
  for (auto& v : out.data()) v *= s;
  return out;
}

template <typename T>
void axpy(Tensor<T>& dst, T alpha, const Tensor<T>& src) {
  require_same_shape(dst, src, "axpy");
  T* d = dst.data().data();
  const T* s = src.data().data();
  const std::size_t n = dst.size();
  for (std::size_t i = 0; i < n; ++i) d[i] += alpha * s[i];
}

template <typename T>
void add_row_vector(Tensor<T>& m, const Tensor<T>& v) {
  require_matrix(m, "add_row_vector");
  expect_shape(v, Shape{m.dim(1)}, "add_row_vector bias");
  const std::size_t c = m.dim(1);
  for (std::size_t i = 0; i < m.dim(0); ++i) {
    T* row = m.data().data() + i * c;
    for (std::size_t j = 0; j < c; ++j) row[j] += v[j];
  }
}

template <typename T>
void column_sums_accumulate(Tensor<T>& dst, const Tensor<T>& m) {
  require_matrix(m, "column_sums");
  expect_shape(dst, Shape{m.dim(1)}, "column_sums destination");
  const std::size_t c = m.dim(1);
  for (std::size_t i = 0; i < m.dim(0); ++i) {
    const T* row = m.data().data() + i * c;
    for (std::size_t j = 0; j < c; ++j) dst[j] += row[j];
  }
}

template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
  Tensor<T> y = matmul(x, w);
  add_row_vector(y, b);
  return y;
}

template <typename T>
Tensor<T> linear_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& grad,
                          Tensor<T>& dw, Tensor<T>& db) {
  matmul_tn_accumulate(dw, x, grad);
  column_sums_accumulate(db, grad);
  return matmul_nt(grad, w);
}

template <typename T>
Tensor<T> gather_rows(const Tensor<T>& m, std::span<const std::size_t> rows) {
  require_matrix(m, "gather_rows");
  if (rows.empty()) throw ShapeError("gather_rows: empty selection");
  const std::size_t c = m.dim(1);
  Tensor<T> out(Shape{rows.size(), c});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= m.dim(0)) throw ShapeError("gather_rows: row index out of range");
    std::copy_n(m.data().data() + rows[i] * c, c, out.data().data() + i * c);
  }
  return out;
}

template <typename T>
void scatter_add_rows(Tensor<T>& dst, const Tensor<T>& src, std::span<const std::size_t> rows) {
  require_matrix(dst, "scatter_add_rows");
  require_matrix(src, "scatter_add_rows");
  if (src.dim(0) != rows.size() || src.dim(1) != dst.dim(1)) {
    throw ShapeError("scatter_add_rows: source does not match selection");
  }
  const std::size_t c = dst.dim(1);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= dst.dim(0)) throw ShapeError("scatter_add_rows: row index out of range");
    T* d = dst.data().data() + rows[i] * c;
    const T* s = src.data().data() + i * c;
    for (std::size_t j = 0; j < c; ++j) d[j] += s[j];
  }
}

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                     LayerNormCache<T>* cache, T eps) {
  require_matrix(x, "layer_norm");
  const std::size_t n = x.dim(0), d = x.dim(1);
  expect_shape(gamma, Shape{d}, "layer_norm gamma");
  expect_shape(beta, Shape{d}, "layer_norm beta");
  Tensor<T> normalized(x.shape());
  std::vector<T> inv_std(n);
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < n; ++i) {
    const T* row = x.data().data() + i * d;
    T mu = 0;
    for (std::size_t j = 0; j < d; ++j) mu += row[j];
    mu /= static_cast<T>(d);
    T var = 0;
    for (std::size_t j = 0; j < d; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<T>(d);
    const T rs = T{1} / std::sqrt(var + eps);
    inv_std[i] = rs;
    for (std::size_t j = 0; j < d; ++j) {
      const T z = (row[j] - mu) * rs;
      normalized.at(i, j) = z;
      out.at(i, j) = z * gamma[j] + beta[j];
    }
  }
  if (cache) {
    cache->normalized = std::move(normalized);
    cache->inv_std = std::move(inv_std);
  }
  return out;
}

template <typename T>
Tensor<T> layer_norm_backward(const Tensor<T>& grad, const Tensor<T>& gamma,
                              const LayerNormCache<T>& cache, Tensor<T>& dgamma,
                              Tensor<T>& dbeta) {
  require_same_shape(grad, cache.normalized, "layer_norm_backward");
  const std::size_t n = grad.dim(0), d = grad.dim(1);
  Tensor<T> dx(grad.shape());
  std::vector<T> gz(d);
  for (std::size_t i = 0; i < n; ++i) {
    T sum_gz = 0, sum_gz_z = 0;
    for (std::size_t j = 0; j < d; ++j) {
      const T g = grad.at(i, j);
      const T z = cache.normalized.at(i, j);
      dgamma[j] += g * z;
      dbeta[j] += g;
      gz[j] = g * gamma[j];
      sum_gz += gz[j];
      sum_gz_z += gz[j] * z;
    }
    const T inv_d = T{1} / static_cast<T>(d);
    for (std::size_t j = 0; j < d; ++j) {
      const T z = cache.normalized.at(i, j);
      dx.at(i, j) = cache.inv_std[i] * (gz[j] - inv_d * sum_gz - z * inv_d * sum_gz_z);
    }
  }
  return dx;
}

template <typename T>
Tensor<T> gelu(const Tensor<T>& x) {
  Tensor<T> out(x.shape());
  const T k = T(1) / std::numbers::sqrt2_v<T>;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const T v = x[i];
    out[i] = T(0.5) * v * (T(1) + std::erf(v * k));
  }
  return out;
}

template <typename T>
Tensor<T> gelu_backward(const Tensor<T>& x, const Tensor<T>& grad) {
  require_same_shape(x, grad, "gelu_backward");
  Tensor<T> out(x.shape());
  const T k = T(1) / std::numbers::sqrt2_v<T>;
  const T inv_sqrt_2pi = T(1) / std::sqrt(T(2) * std::numbers::pi_v<T>);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const T v = x[i];
    const T cdf = T(0.5) * (T(1) + std::erf(v * k));
    const T pdf = inv_sqrt_2pi * std::exp(T(-0.5) * v * v);
    out[i] = grad[i] * (cdf + v * pdf);
  }
  return out;
}

template <typename T>
Tensor<T> mean(const Tensor<T>& x, std::size_t axis) {
  const AxisSplit s = split_at(x, axis);
  Tensor<T> out = reduced_shape_tensor(x, axis);
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t q = 0; q < s.inner; ++q) {
      T total = 0;
      for (std::size_t j = 0; j < s.extent; ++j) total += x[(o * s.extent + j) * s.inner + q];
      out[o * s.inner + q] = total / static_cast<T>(s.extent);
    }
  return out;
}

template <typename T>
Tensor<T> mean_backward(const Shape& input_shape, const Tensor<T>& grad, std::size_t axis) {
  Tensor<T> dx(input_shape);
  const AxisSplit s = split_at(dx, axis);
  if (grad.size() != s.outer * s.inner) throw ShapeError("mean_backward: gradient shape mismatch");
  const T inv = T{1} / static_cast<T>(s.extent);
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t j = 0; j < s.extent; ++j)
      for (std::size_t q = 0; q < s.inner; ++q)
        dx[(o * s.extent + j) * s.inner + q] = grad[o * s.inner + q] * inv;
  return dx;
}

template <typename T>
Tensor<T> variance(const Tensor<T>& x, std::size_t axis) {
  const AxisSplit s = split_at(x, axis);
  const Tensor<T> mu = mean(x, axis);
  Tensor<T> out = reduced_shape_tensor(x, axis);
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t q = 0; q < s.inner; ++q) {
      T total = 0;
      const T m = mu[o * s.inner + q];
      for (std::size_t j = 0; j < s.extent; ++j) {
        const T dlt = x[(o * s.extent + j) * s.inner + q] - m;
        total += dlt * dlt;
      }
      out[o * s.inner + q] = total / static_cast<T>(s.extent);
    }
  return out;
}

template <typename T>
Tensor<T> variance_backward(const Tensor<T>& x, const Tensor<T>& grad, std::size_t axis) {
  const AxisSplit s = split_at(x, axis);
  if (grad.size() != s.outer * s.inner) throw ShapeError("variance_backward: gradient shape mismatch");
  const Tensor<T> mu = mean(x, axis);
  Tensor<T> dx(x.shape());
  const T k = T{2} / static_cast<T>(s.extent);
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t j = 0; j < s.extent; ++j)
      for (std::size_t q = 0; q < s.inner; ++q) {
        const std::size_t idx = (o * s.extent + j) * s.inner + q;
        dx[idx] = grad[o * s.inner + q] * k * (x[idx] - mu[o * s.inner + q]);
      }
  return dx;
}

template <typename T>
T cross_entropy(const Tensor<T>& logits, std::span<const int> labels, Tensor<T>* grad) {
  require_matrix(logits, "cross_entropy");
  const std::size_t b = logits.dim(0), c = logits.dim(1);
  if (labels.size() != b) throw ShapeError("cross_entropy: one label per row required");
  const Tensor<T> p = softmax(logits, 1);
  if (grad) *grad = p;
  T total = 0;
  for (std::size_t i = 0; i < b; ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= c) {
      throw DataError("label " + std::to_string(labels[i]) + " outside [0, " + std::to_string(c) + ")");
    }
    const auto y = static_cast<std::size_t>(labels[i]);
    // log-sum-exp form avoids log(0) for confident wrong predictions.
    const T* row = logits.data().data() + i * c;
    T mx = *std::max_element(row, row + c);
    T s = 0;
    for (std::size_t j = 0; j < c; ++j) s += std::exp(row[j] - mx);
    total += std::log(s) + mx - row[y];
    if (grad) grad->at(i, y) -= T{1};
  }
  const T inv_b = T{1} / static_cast<T>(b);
  if (grad) {
    for (auto& v : grad->data()) v *= inv_b;
  }
  return total * inv_b;
}

template <typename T>
T mse(const Tensor<T>& pred, const Tensor<T>& target, Tensor<T>* grad) {
  require_same_shape(pred, target, "mse");
  const T inv_n = T{1} / static_cast<T>(pred.size());
  if (grad) *grad = Tensor<T>(pred.shape());
  T total = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const T d = pred[i] - target[i];
    total += d * d;
    if (grad) (*grad)[i] = T{2} * d * inv_n;
  }
  return total * inv_n;
}

#define RF_INSTANTIATE_OPS(T)                                                                     \
  template Tensor<T> mode_product(const Tensor<T>&, const Tensor<T>&, std::size_t);              \
  template Tensor<T> mode_product_backward(const Tensor<T>&, const Tensor<T>&, std::size_t);     \
  template Tensor<T> softmax(const Tensor<T>&, std::size_t);                                     \
  template Tensor<T> softmax_backward(const Tensor<T>&, const Tensor<T>&, std::size_t);          \
  template Tensor<T> transpose(const Tensor<T>&);                                                \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);                                 \
  template Tensor<T> matmul_nt(const Tensor<T>&, const Tensor<T>&);                              \
  template Tensor<T> matmul_tn(const Tensor<T>&, const Tensor<T>&);                              \
  template void matmul_tn_accumulate(Tensor<T>&, const Tensor<T>&, const Tensor<T>&);            \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                    \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                                    \
  template Tensor<T> hadamard(const Tensor<T>&, const Tensor<T>&);                               \
  template Tensor<T> scale(const Tensor<T>&, T);                                                 \
  template void axpy(Tensor<T>&, T, const Tensor<T>&);                                           \
  template void add_row_vector(Tensor<T>&, const Tensor<T>&);                                    \
  template void column_sums_accumulate(Tensor<T>&, const Tensor<T>&);                            \
  template Tensor<T> linear(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);               \
  template Tensor<T> linear_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,       \
                                     Tensor<T>&, Tensor<T>&);                                    \
  template Tensor<T> gather_rows(const Tensor<T>&, std::span<const std::size_t>);                \
  template void scatter_add_rows(Tensor<T>&, const Tensor<T>&, std::span<const std::size_t>);    \
  template Tensor<T> layer_norm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,            \
                                LayerNormCache<T>*, T);                                          \
  template Tensor<T> layer_norm_backward(const Tensor<T>&, const Tensor<T>&,                     \
                                         const LayerNormCache<T>&, Tensor<T>&, Tensor<T>&);      \
  template Tensor<T> gelu(const Tensor<T>&);                                                     \
  template Tensor<T> gelu_backward(const Tensor<T>&, const Tensor<T>&);                          \
  template Tensor<T> mean(const Tensor<T>&, std::size_t);                                        \
  template Tensor<T> mean_backward(const Shape&, const Tensor<T>&, std::size_t);                 \
  template Tensor<T> variance(const Tensor<T>&, std::size_t);                                    \
  template Tensor<T> variance_backward(const Tensor<T>&, const Tensor<T>&, std::size_t);         \
  template T cross_entropy(const Tensor<T>&, std::span<const int>, Tensor<T>*);                  \
  template T mse(const Tensor<T>&, const Tensor<T>&, Tensor<T>*);

RF_INSTANTIATE_OPS(float)
RF_INSTANTIATE_OPS(double)

#undef RF_INSTANTIATE_OPS

}  // namespace rf
