#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "robustformer/tensor.hpp"

namespace rf {

enum class Boundary { zero, periodic };
enum class Band { low, high };

std::string_view to_string(Boundary b);
Boundary parse_boundary(std::string_view text);

/// Highpass partner of an orthonormal lowpass by the quadrature-mirror rule
/// h[t] = (-1)^t * l[n-1-t].
std::vector<double> qmf_highpass(std::span<const double> lowpass);

struct WaveletFilter {
  std::string name;
  std::vector<double> lowpass;
  std::vector<double> highpass;

  /// "haar" or "db2" (4-tap Daubechies).
  static WaveletFilter builtin(std::string_view name);

  std::size_t taps() const { return lowpass.size(); }
  /// Unit-norm lowpass, orthogonal highpass, equal lengths.
  bool is_orthonormal(double tol = 1e-12) const;
  std::span<const double> coefficients(Band band) const {
    return band == Band::low ? std::span<const double>(lowpass) : std::span<const double>(highpass);
  }
};

/// The (ceil(k/2) x k) strided filtering matrix: row i holds f[t] at column
/// 2i + t. Zero boundary drops taps past the edge, periodic wraps them.
template <typename T>
struct AnalysisMatrix {
  Tensor<T> matrix;
  std::string filter;
  Band band = Band::low;
  Boundary boundary = Boundary::zero;
};

template <typename T>
AnalysisMatrix<T> construct_matrix(std::span<const double> filter, std::size_t k, Boundary boundary);

template <typename T>
AnalysisMatrix<T> construct_matrix(const WaveletFilter& filter, Band band, std::size_t k,
                                   Boundary boundary);

/// One decomposition level over a set of axes. Bands are ordered by binary
/// counting with the last transformed axis as the least significant digit:
/// {L, H}, {LL, LH, HL, HH}, {LLL, LLH, ..., HHH}.
template <typename T>
struct SubbandSet {
  std::size_t level = 1;
  std::vector<std::size_t> axes;
  Shape source_shape;
  std::vector<std::string> labels;
  std::vector<Tensor<T>> bands;

  std::size_t size() const { return bands.size(); }
  const Tensor<T>& band(std::string_view label) const;
  Tensor<T>& band(std::string_view label);
  const Tensor<T>& low() const { return bands.front(); }
};

/// Label for band index `index` of a transform over `naxes` axes.
std::string band_label(std::size_t index, std::size_t naxes);

template <typename T>
SubbandSet<T> dwt(const Tensor<T>& x, std::span<const std::size_t> axes, const WaveletFilter& filter,
                  Boundary boundary);

template <typename T>
SubbandSet<T> dwt1d(const Tensor<T>& x, std::size_t axis, const WaveletFilter& filter,
                    Boundary boundary = Boundary::zero) {
  const std::array<std::size_t, 1> axes{axis};
  return dwt(x, axes, filter, boundary);
}

template <typename T>
SubbandSet<T> dwt2d(const Tensor<T>& x, std::array<std::size_t, 2> axes, const WaveletFilter& filter,
                    Boundary boundary = Boundary::zero) {
  return dwt(x, std::span<const std::size_t>(axes), filter, boundary);
}

template <typename T>
SubbandSet<T> dwt3d(const Tensor<T>& x, std::array<std::size_t, 3> axes, const WaveletFilter& filter,
                    Boundary boundary = Boundary::zero) {
  return dwt(x, std::span<const std::size_t>(axes), filter, boundary);
}

/// Adjoint of dwt: sum over bands of the transposed analysis products. Also
/// the backward pass of dwt when `bands` holds per-band gradients.
template <typename T>
Tensor<T> dwt_adjoint(const SubbandSet<T>& bands, const WaveletFilter& filter, Boundary boundary);

/// Inverse transform; requires an orthonormal filter, for which synthesis
/// is exactly the adjoint.
template <typename T>
Tensor<T> idwt(const SubbandSet<T>& bands, const WaveletFilter& filter, Boundary boundary);

}  // namespace rf
