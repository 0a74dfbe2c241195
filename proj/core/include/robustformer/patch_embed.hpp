#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "robustformer/rng.hpp"
#include "robustformer/tensor.hpp"
#include "robustformer/wavelet.hpp"

namespace rf {

/// How the sub-bands of the input DWT are folded into one feature tensor.
enum class ReduceMode { avg, omit, concat };

std::string_view to_string(ReduceMode mode);
ReduceMode parse_reduce_mode(std::string_view text);

struct EmbedConfig {
  /// false selects the plain patchifier (no DWT) used by the baseline model;
  /// it then patches raw pixels with twice the patch and tubelet size so the
  /// token grid matches the wavelet variants.
  bool use_dwt = true;
  ReduceMode mode = ReduceMode::omit;
  std::size_t patch = 4;
  std::size_t tubelet = 2;
  std::size_t embed_dim = 64;
  double mask_ratio = 0.75;
  std::string filter = "haar";
  Boundary boundary = Boundary::zero;
};

struct TokenGrid {
  std::size_t temporal = 1;
  std::size_t rows = 1;
  std::size_t cols = 1;

  std::size_t spatial() const { return rows * cols; }
  std::size_t count() const { return temporal * rows * cols; }
  friend bool operator==(const TokenGrid&, const TokenGrid&) = default;
};

/// Everything derived from an input shape and an EmbedConfig.
struct EmbedPlan {
  Shape input_shape;    // (C, H, W) or (C, T, H, W)
  bool video = false;
  Shape feature_shape;  // after DWT + reduction (or the raw input for the baseline)
  TokenGrid grid;
  std::size_t patch_t = 1;  // patch extents measured in feature space
  std::size_t patch_h = 1;
  std::size_t patch_w = 1;
  std::size_t patch_dim = 0;
};

/// Validates divisibility and computes the token grid; throws ConfigError.
EmbedPlan plan_embedding(const Shape& input_shape, const EmbedConfig& cfg);

template <typename T>
Tensor<T> subband_reduce(const SubbandSet<T>& bands, ReduceMode mode);

/// Gradient of subband_reduce: per-band gradients with `forward`'s metadata.
template <typename T>
SubbandSet<T> subband_reduce_backward(const Tensor<T>& grad, const SubbandSet<T>& forward,
                                      ReduceMode mode);

/// DWT over the spatial (and temporal) axes followed by subband_reduce; the
/// identity for the baseline.
template <typename T>
Tensor<T> wavelet_features(const Tensor<T>& x, const EmbedPlan& plan, const EmbedConfig& cfg);
template <typename T>
Tensor<T> wavelet_features_backward(const Tensor<T>& grad, const EmbedPlan& plan,
                                    const EmbedConfig& cfg);

/// Non-overlapping patch / tubelet extraction: (num_tokens x patch_dim).
/// Vector layout is (channel, dt, dy, dx) row-major; tokens are (t, r, c).
template <typename T>
Tensor<T> extract_patches(const Tensor<T>& features, const EmbedPlan& plan);
template <typename T>
Tensor<T> extract_patches_backward(const Tensor<T>& grad, const EmbedPlan& plan);

/// wavelet_features followed by extract_patches.
template <typename T>
Tensor<T> patch_vectors(const Tensor<T>& x, const EmbedPlan& plan, const EmbedConfig& cfg);
template <typename T>
Tensor<T> patch_vectors_backward(const Tensor<T>& grad, const EmbedPlan& plan, const EmbedConfig& cfg);

/// Fixed factorised sin/cos table, one row per token in grid order. Image
/// grids (temporal == 1) use two factors, video grids three.
template <typename T>
Tensor<T> sinusoidal_positions(const TokenGrid& grid, std::size_t dim);

template <typename T>
struct EmbedWeights {
  Tensor<T> weight;  // (patch_dim x embed_dim)
  Tensor<T> bias;    // (embed_dim)
};

/// uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) for the weight, zero bias.
template <typename T>
EmbedWeights<T> init_embed_weights(const EmbedPlan& plan, const EmbedConfig& cfg, Rng& rng);

/// Tokens for one sample: patch_vectors * W + b + positions.
template <typename T>
Tensor<T> embed_tokens(const Tensor<T>& x, const EmbedPlan& plan, const EmbedConfig& cfg,
                       const EmbedWeights<T>& weights, const Tensor<T>& positions);

template <typename T>
struct TokenBatch {
  Tensor<T> tokens;      // (batch x num_tokens x embed_dim)
  TokenGrid grid;
  Tensor<T> positional;  // (num_tokens x embed_dim), already added to tokens
};

/// x is (C, H, W) or a batch (B, C, H, W).
template <typename T>
TokenBatch<T> wavelet_embed_image(const Tensor<T>& x, const EmbedWeights<T>& weights,
                                  const EmbedConfig& cfg);
/// x is (C, T, H, W) or a batch (B, C, T, H, W).
template <typename T>
TokenBatch<T> wavelet_embed_video(const Tensor<T>& x, const EmbedWeights<T>& weights,
                                  const EmbedConfig& cfg);

struct MaskPattern {
  TokenGrid grid;
  std::vector<std::size_t> visible;       // ascending token indices
  std::vector<std::size_t> masked;        // ascending token indices
  std::vector<std::uint8_t> spatial_mask; // rows*cols, 1 = masked

  bool is_masked(std::size_t token) const { return spatial_mask[token % grid.spatial()] != 0; }
};

/// Samples floor(ratio * rows * cols) spatial cells and masks that tube
/// through every temporal index. For images (temporal == 1) this is plain
/// random patch masking.
MaskPattern tube_mask(const TokenGrid& grid, double ratio, Rng& rng);

}  // namespace rf
