#include "robustformer/wavelet.hpp"

#include <cmath>
#include <numbers>
#include <set>

#include "robustformer/ops.hpp"

namespace rf {

std::string_view to_string(Boundary b) { return b == Boundary::zero ? "zero" : "periodic"; }

Boundary parse_boundary(std::string_view text) {
  if (text == "zero") return Boundary::zero;
  if (text == "periodic") return Boundary::periodic;
  throw ConfigError("unknown boundary mode '" + std::string(text) + "' (expected zero|periodic)");
}

std::vector<double> qmf_highpass(std::span<const double> lowpass) {
  if (lowpass.empty()) throw ContractError("qmf_highpass: empty lowpass");
  const std::size_t n = lowpass.size();
  std::vector<double> high(n);
  for (std::size_t t = 0; t < n; ++t) high[t] = (t % 2 == 0 ? 1.0 : -1.0) * lowpass[n - 1 - t];
  return high;
}

WaveletFilter WaveletFilter::builtin(std::string_view name) {
  WaveletFilter f;
  f.name = std::string(name);
  if (name == "haar") {
    const double a = 1.0 / std::numbers::sqrt2;
    f.lowpass = {a, a};
  } else if (name == "db2") {
    const double s3 = std::sqrt(3.0);
    const double d = 4.0 * std::numbers::sqrt2;
    f.lowpass = {(1.0 + s3) / d, (3.0 + s3) / d, (3.0 - s3) / d, (1.0 - s3) / d};
  } else {
    throw ConfigError("unknown wavelet filter '" + std::string(name) + "' (expected haar|db2)");
  }
  f.highpass = qmf_highpass(f.lowpass);
  return f;
}

bool WaveletFilter::is_orthonormal(double tol) const {
  if (lowpass.empty() || lowpass.size() != highpass.size()) return false;
  double ll = 0, hh = 0, lh = 0;
  for (std::size_t i = 0; i < lowpass.size(); ++i) {
    ll += lowpass[i] * lowpass[i];
    hh += highpass[i] * highpass[i];
    lh += lowpass[i] * highpass[i];
  }
  return std::abs(ll - 1.0) <= tol && std::abs(hh - 1.0) <= tol && std::abs(lh) <= tol;
}

template <typename T>
AnalysisMatrix<T> construct_matrix(std::span<const double> filter, std::size_t k, Boundary boundary) {
  if (k == 0) throw ShapeError("construct_matrix: axis length must be positive");
  if (filter.empty()) throw ContractError("construct_matrix: empty filter");
  const std::size_t rows = (k + 1) / 2;
  std::vector<double> m(rows * k, 0.0);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t t = 0; t < filter.size(); ++t) {
      std::size_t j = 2 * i + t;
      if (j >= k) {
        if (boundary == Boundary::zero) break;
        j %= k;
      }
      m[i * k + j] += filter[t];
    }
  }
  AnalysisMatrix<T> out;
  out.matrix = Tensor<T>(Shape{rows, k}, std::vector<T>(m.begin(), m.end()));
  out.boundary = boundary;
  return out;
}

template <typename T>
AnalysisMatrix<T> construct_matrix(const WaveletFilter& filter, Band band, std::size_t k,
                                   Boundary boundary) {
  AnalysisMatrix<T> out = construct_matrix<T>(filter.coefficients(band), k, boundary);
  out.filter = filter.name;
  out.band = band;
  return out;
}

std::string band_label(std::size_t index, std::size_t naxes) {
  std::string label(naxes, 'L');
  for (std::size_t a = 0; a < naxes; ++a) {
    if ((index >> (naxes - 1 - a)) & 1U) label[a] = 'H';
  }
  return label;
}

template <typename T>
const Tensor<T>& SubbandSet<T>::band(std::string_view label) const {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == label) return bands[i];
  }
  throw ContractError("no sub-band labelled '" + std::string(label) + "'");
}

template <typename T>
Tensor<T>& SubbandSet<T>::band(std::string_view label) {
  return const_cast<Tensor<T>&>(std::as_const(*this).band(label));
}

namespace {

void validate_axes(std::span<const std::size_t> axes, std::size_t rank) {
  if (axes.empty()) throw ContractError("dwt: at least one axis required");
  std::set<std::size_t> seen;
  for (std::size_t a : axes) {
    if (a >= rank) throw ShapeError("dwt: axis " + std::to_string(a) + " out of range");
    if (!seen.insert(a).second) throw ContractError("dwt: duplicate axis " + std::to_string(a));
  }
}

}  // namespace

template <typename T>
SubbandSet<T> dwt(const Tensor<T>& x, std::span<const std::size_t> axes, const WaveletFilter& filter,
                  Boundary boundary) {
  validate_axes(axes, x.rank());
  // Breadth-first split: after processing axis a, `level` holds 2^(a+1)
  // tensors in label order.
  std::vector<Tensor<T>> level{x};
  for (std::size_t axis : axes) {
    const std::size_t k = x.dim(axis);
    const Tensor<T> low = construct_matrix<T>(filter, Band::low, k, boundary).matrix;
    const Tensor<T> high = construct_matrix<T>(filter, Band::high, k, boundary).matrix;
    std::vector<Tensor<T>> next;
    next.reserve(level.size() * 2);
    for (const auto& t : level) {
      next.push_back(mode_product(t, low, axis));
      next.push_back(mode_product(t, high, axis));
    }
    level = std::move(next);
  }
  SubbandSet<T> out;
  out.axes.assign(axes.begin(), axes.end());
  out.source_shape = x.shape();
  out.bands = std::move(level);
  for (std::size_t i = 0; i < out.bands.size(); ++i) out.labels.push_back(band_label(i, axes.size()));
  return out;
}

template <typename T>
Tensor<T> dwt_adjoint(const SubbandSet<T>& bands, const WaveletFilter& filter, Boundary boundary) {
  const std::size_t naxes = bands.axes.size();
  if (naxes == 0 || bands.bands.size() != (std::size_t{1} << naxes)) {
    throw ContractError("dwt_adjoint: band count does not match 2^axes");
  }
  validate_axes(bands.axes, bands.source_shape.size());
  Shape band_shape = bands.source_shape;
  for (std::size_t a : bands.axes) band_shape[a] = (band_shape[a] + 1) / 2;
  for (const auto& b : bands.bands) {
    if (b.shape() != band_shape) {
      throw ContractError("dwt_adjoint: inconsistent band shape " + shape_string(b.shape()) +
                          ", expected " + shape_string(band_shape));
    }
  }
  // Undo the axes in reverse, merging band pairs (L, H) at each step.
  std::vector<Tensor<T>> level = bands.bands;
  for (std::size_t step = naxes; step-- > 0;) {
    const std::size_t axis = bands.axes[step];
    const std::size_t k = bands.source_shape[axis];
    const Tensor<T> low = construct_matrix<T>(filter, Band::low, k, boundary).matrix;
    const Tensor<T> high = construct_matrix<T>(filter, Band::high, k, boundary).matrix;
    std::vector<Tensor<T>> next;
    next.reserve(level.size() / 2);
    for (std::size_t i = 0; i < level.size(); i += 2) {
      Tensor<T> merged = mode_product_backward(level[i], low, axis);
      add_inplace(merged, mode_product_backward(level[i + 1], high, axis));
      next.push_back(std::move(merged));
    }
    level = std::move(next);
  }
  return std::move(level.front());
}

template <typename T>
Tensor<T> idwt(const SubbandSet<T>& bands, const WaveletFilter& filter, Boundary boundary) {
  if (!filter.is_orthonormal(1e-10)) {
    throw ContractError("idwt: filter '" + filter.name + "' is not orthonormal");
  }
  return dwt_adjoint(bands, filter, boundary);
}

#define RF_INSTANTIATE_WAVELET(T)                                                                    \
  template struct SubbandSet<T>;                                                                    \
  template AnalysisMatrix<T> construct_matrix(std::span<const double>, std::size_t, Boundary);      \
  template AnalysisMatrix<T> construct_matrix(const WaveletFilter&, Band, std::size_t, Boundary);   \
  template SubbandSet<T> dwt(const Tensor<T>&, std::span<const std::size_t>, const WaveletFilter&,  \
                             Boundary);                                                             \
  template Tensor<T> dwt_adjoint(const SubbandSet<T>&, const WaveletFilter&, Boundary);             \
  template Tensor<T> idwt(const SubbandSet<T>&, const WaveletFilter&, Boundary);

RF_INSTANTIATE_WAVELET(float)
RF_INSTANTIATE_WAVELET(double)

#undef RF_INSTANTIATE_WAVELET

}  // namespace rf
