#include "robustformer/patch_embed.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "robustformer/ops.hpp"

namespace rf {

std::string_view to_string(ReduceMode mode) {
  switch (mode) {
    case ReduceMode::avg: return "avg";
    case ReduceMode::omit: return "omit";
    case ReduceMode::concat: return "concat";
  }
  return "?";
}

ReduceMode parse_reduce_mode(std::string_view text) {
  if (text == "avg") return ReduceMode::avg;
  if (text == "omit") return ReduceMode::omit;
  if (text == "concat") return ReduceMode::concat;
  throw ConfigError("unknown sub-band reduction '" + std::string(text) + "' (expected avg|omit|concat)");
}

namespace {

void require_divisible(std::size_t extent, std::size_t by, const char* what) {
  if (by == 0 || extent % by != 0 || extent / by == 0) {
    throw ConfigError(std::string(what) + ": extent " + std::to_string(extent) +
                      " is not a positive multiple of " + std::to_string(by));
  }
}

std::vector<std::size_t> transform_axes(bool video) {
  return video ? std::vector<std::size_t>{1, 2, 3} : std::vector<std::size_t>{1, 2};
}

template <typename T>
std::vector<Tensor<T>> reduce_backward_bands(const Tensor<T>& grad, const Shape& band_shape,
                                             std::size_t count, ReduceMode mode) {
  std::vector<Tensor<T>> out;
  out.reserve(count);
  switch (mode) {
    case ReduceMode::avg: {
      expect_shape(grad, band_shape, "subband_reduce_backward(avg)");
      const Tensor<T> share = scale(grad, T{1} / static_cast<T>(count));
      for (std::size_t i = 0; i < count; ++i) out.push_back(share);
      break;
    }
    case ReduceMode::omit: {
      expect_shape(grad, band_shape, "subband_reduce_backward(omit)");
      out.push_back(grad);
      for (std::size_t i = 1; i < count; ++i) out.emplace_back(band_shape);
      break;
    }
    case ReduceMode::concat: {
      Shape stacked = band_shape;
      stacked[0] *= count;
      expect_shape(grad, stacked, "subband_reduce_backward(concat)");
      const std::size_t chunk = shape_size(band_shape);
      for (std::size_t i = 0; i < count; ++i) {
        std::vector<T> part(grad.data().begin() + static_cast<std::ptrdiff_t>(i * chunk),
                            grad.data().begin() + static_cast<std::ptrdiff_t>((i + 1) * chunk));
        out.emplace_back(band_shape, std::move(part));
      }
      break;
    }
  }
  return out;
}

}  // namespace

EmbedPlan plan_embedding(const Shape& input_shape, const EmbedConfig& cfg) {
  if (input_shape.size() != 3 && input_shape.size() != 4) {
    throw ConfigError("embedding input must be (C,H,W) or (C,T,H,W), got " + shape_string(input_shape));
  }
  if (cfg.patch == 0 || cfg.tubelet == 0 || cfg.embed_dim == 0) {
    throw ConfigError("patch size, tubelet size and embedding dimension must be positive");
  }
  if (!(cfg.mask_ratio >= 0.0 && cfg.mask_ratio < 1.0)) {
    throw ConfigError("mask ratio must lie in [0, 1)");
  }
  EmbedPlan plan;
  plan.input_shape = input_shape;
  plan.video = input_shape.size() == 4;
  const std::size_t channels = input_shape[0];
  const std::size_t frames = plan.video ? input_shape[1] : 1;
  const std::size_t height = input_shape[plan.video ? 2 : 1];
  const std::size_t width = input_shape[plan.video ? 3 : 2];

  std::size_t feat_c = channels, feat_t = frames, feat_h = height, feat_w = width;
  if (cfg.use_dwt) {
    for (std::size_t extent : {height, width}) {
      if (extent % 2 != 0) throw ConfigError("wavelet embedding requires even spatial extents");
    }
    if (plan.video && frames % 2 != 0) throw ConfigError("wavelet embedding requires an even frame count");
    const std::size_t nbands = plan.video ? 8 : 4;
    feat_c = cfg.mode == ReduceMode::concat ? channels * nbands : channels;
    feat_t = plan.video ? frames / 2 : 1;
    feat_h = height / 2;
    feat_w = width / 2;
    plan.patch_h = plan.patch_w = cfg.patch;
    plan.patch_t = plan.video ? cfg.tubelet : 1;
  } else {
    plan.patch_h = plan.patch_w = 2 * cfg.patch;
    plan.patch_t = plan.video ? 2 * cfg.tubelet : 1;
  }
  require_divisible(feat_h, plan.patch_h, "patch rows");
  require_divisible(feat_w, plan.patch_w, "patch columns");
  require_divisible(feat_t, plan.patch_t, "tubelet frames");

  plan.feature_shape = plan.video ? Shape{feat_c, feat_t, feat_h, feat_w} : Shape{feat_c, feat_h, feat_w};
  plan.grid = TokenGrid{feat_t / plan.patch_t, feat_h / plan.patch_h, feat_w / plan.patch_w};
  plan.patch_dim = feat_c * plan.patch_t * plan.patch_h * plan.patch_w;
  return plan;
}

template <typename T>
Tensor<T> subband_reduce(const SubbandSet<T>& bands, ReduceMode mode) {
  if (bands.bands.empty()) throw ContractError("subband_reduce: empty sub-band set");
  const Shape& shape = bands.bands.front().shape();
  for (const auto& b : bands.bands) {
    if (b.shape() != shape) throw ContractError("subband_reduce: bands differ in shape");
  }
  switch (mode) {
    case ReduceMode::omit:
      return bands.bands.front();
    case ReduceMode::avg: {
      Tensor<T> out(shape);
      for (const auto& b : bands.bands) add_inplace(out, b);
      for (auto& v : out.data()) v /= static_cast<T>(bands.size());
      return out;
    }
    case ReduceMode::concat: {
      Shape stacked = shape;
      stacked[0] *= bands.size();
      std::vector<T> data;
      data.reserve(shape_size(stacked));
      for (const auto& b : bands.bands) data.insert(data.end(), b.data().begin(), b.data().end());
      return Tensor<T>(stacked, std::move(data));
    }
  }
  throw ConfigError("subband_reduce: unknown mode");
}

template <typename T>
SubbandSet<T> subband_reduce_backward(const Tensor<T>& grad, const SubbandSet<T>& forward,
                                      ReduceMode mode) {
  SubbandSet<T> out;
  out.level = forward.level;
  out.axes = forward.axes;
  out.source_shape = forward.source_shape;
  out.labels = forward.labels;
  out.bands = reduce_backward_bands(grad, forward.bands.front().shape(), forward.size(), mode);
  return out;
}

template <typename T>
Tensor<T> wavelet_features(const Tensor<T>& x, const EmbedPlan& plan, const EmbedConfig& cfg) {
  expect_shape(x, plan.input_shape, "wavelet_features input");
  if (!cfg.use_dwt) return x;
  const auto axes = transform_axes(plan.video);
  const WaveletFilter filter = WaveletFilter::builtin(cfg.filter);
  return subband_reduce(dwt(x, axes, filter, cfg.boundary), cfg.mode);
}

template <typename T>
Tensor<T> wavelet_features_backward(const Tensor<T>& grad, const EmbedPlan& plan,
                                    const EmbedConfig& cfg) {
  expect_shape(grad, plan.feature_shape, "wavelet_features_backward gradient");
  if (!cfg.use_dwt) return grad;
  const auto axes = transform_axes(plan.video);
  Shape band_shape = plan.input_shape;
  for (std::size_t a : axes) band_shape[a] = (band_shape[a] + 1) / 2;
  SubbandSet<T> bands;
  bands.axes = axes;
  bands.source_shape = plan.input_shape;
  const std::size_t count = std::size_t{1} << axes.size();
  for (std::size_t i = 0; i < count; ++i) bands.labels.push_back(band_label(i, axes.size()));
  bands.bands = reduce_backward_bands(grad, band_shape, count, cfg.mode);
  return dwt_adjoint(bands, WaveletFilter::builtin(cfg.filter), cfg.boundary);
}

namespace {

// Visits (token, vector offset, feature flat index) for every patch entry.
template <typename F>
void for_each_patch_entry(const EmbedPlan& plan, F&& visit) {
  const Shape& fs = plan.feature_shape;
  const std::size_t channels = fs[0];
  const std::size_t frames = plan.video ? fs[1] : 1;
  const std::size_t height = fs[plan.video ? 2 : 1];
  const std::size_t width = fs[plan.video ? 3 : 2];
  (void)frames;
  const TokenGrid& g = plan.grid;
  std::size_t token = 0;
  for (std::size_t tt = 0; tt < g.temporal; ++tt)
    for (std::size_t r = 0; r < g.rows; ++r)
      for (std::size_t c = 0; c < g.cols; ++c, ++token) {
        std::size_t offset = 0;
        for (std::size_t ch = 0; ch < channels; ++ch)
          for (std::size_t dt = 0; dt < plan.patch_t; ++dt)
            for (std::size_t dy = 0; dy < plan.patch_h; ++dy) {
              const std::size_t t = tt * plan.patch_t + dt;
              const std::size_t y = r * plan.patch_h + dy;
              const std::size_t row_base = ((ch * frames + t) * height + y) * width + c * plan.patch_w;
              for (std::size_t dx = 0; dx < plan.patch_w; ++dx, ++offset) {
                visit(token, offset, row_base + dx);
              }
            }
      }
}

}  // namespace

template <typename T>
Tensor<T> extract_patches(const Tensor<T>& features, const EmbedPlan& plan) {
  expect_shape(features, plan.feature_shape, "extract_patches input");
  Tensor<T> out(Shape{plan.grid.count(), plan.patch_dim});
  const std::size_t p = plan.patch_dim;
  for_each_patch_entry(plan, [&](std::size_t token, std::size_t offset, std::size_t src) {
    out[token * p + offset] = features[src];
  });
  return out;
}

template <typename T>
Tensor<T> extract_patches_backward(const Tensor<T>& grad, const EmbedPlan& plan) {
  expect_shape(grad, Shape{plan.grid.count(), plan.patch_dim}, "extract_patches_backward gradient");
  Tensor<T> out(plan.feature_shape);
  const std::size_t p = plan.patch_dim;
  for_each_patch_entry(plan, [&](std::size_t token, std::size_t offset, std::size_t dst) {
    out[dst] += grad[token * p + offset];
  });
  return out;
}

template <typename T>
Tensor<T> patch_vectors(const Tensor<T>& x, const EmbedPlan& plan, const EmbedConfig& cfg) {
  return extract_patches(wavelet_features(x, plan, cfg), plan);
}

template <typename T>
Tensor<T> patch_vectors_backward(const Tensor<T>& grad, const EmbedPlan& plan, const EmbedConfig& cfg) {
  return wavelet_features_backward(extract_patches_backward(grad, plan), plan, cfg);
}

template <typename T>
Tensor<T> sinusoidal_positions(const TokenGrid& grid, std::size_t dim) {
  const std::size_t factors = grid.temporal > 1 ? 3 : 2;
  const std::size_t chunk = 2 * (dim / (2 * factors));
  Tensor<T> out(Shape{grid.count(), dim});
  if (chunk == 0) return out;
  const std::size_t half = chunk / 2;
  std::size_t token = 0;
  for (std::size_t t = 0; t < grid.temporal; ++t)
    for (std::size_t r = 0; r < grid.rows; ++r)
      for (std::size_t c = 0; c < grid.cols; ++c, ++token) {
        const std::size_t coords3[3] = {t, r, c};
        const std::size_t* coords = factors == 3 ? coords3 : coords3 + 1;
        for (std::size_t f = 0; f < factors; ++f) {
          const double pos = static_cast<double>(coords[f]);
          for (std::size_t k = 0; k < half; ++k) {
            const double omega = 1.0 / std::pow(10000.0, static_cast<double>(k) / static_cast<double>(half));
            out.at(token, f * chunk + k) = static_cast<T>(std::sin(pos * omega));
            out.at(token, f * chunk + half + k) = static_cast<T>(std::cos(pos * omega));
          }
        }
      }
  return out;
}

template <typename T>
EmbedWeights<T> init_embed_weights(const EmbedPlan& plan, const EmbedConfig& cfg, Rng& rng) {
  EmbedWeights<T> w;
  w.weight = Tensor<T>(Shape{plan.patch_dim, cfg.embed_dim});
  const double bound = 1.0 / std::sqrt(static_cast<double>(plan.patch_dim));
  for (auto& v : w.weight.data()) v = static_cast<T>(rng.uniform(-bound, bound));
  w.bias = Tensor<T>(Shape{cfg.embed_dim});
  return w;
}

template <typename T>
Tensor<T> embed_tokens(const Tensor<T>& x, const EmbedPlan& plan, const EmbedConfig& cfg,
                       const EmbedWeights<T>& weights, const Tensor<T>& positions) {
  Tensor<T> tokens = linear(patch_vectors(x, plan, cfg), weights.weight, weights.bias);
  add_inplace(tokens, positions);
  return tokens;
}

namespace {

template <typename T>
TokenBatch<T> embed_batch(const Tensor<T>& x, const EmbedWeights<T>& weights, const EmbedConfig& cfg,
                          std::size_t sample_rank) {
  const bool batched = x.rank() == sample_rank + 1;
  if (!batched && x.rank() != sample_rank) {
    throw ShapeError("embedding input has unexpected rank: " + shape_string(x.shape()));
  }
  const std::size_t count = batched ? x.dim(0) : 1;
  const Shape sample_shape(x.shape().begin() + (batched ? 1 : 0), x.shape().end());
  const EmbedPlan plan = plan_embedding(sample_shape, cfg);
  expect_shape(weights.weight, Shape{plan.patch_dim, cfg.embed_dim}, "embedding weight");
  TokenBatch<T> out;
  out.grid = plan.grid;
  out.positional = sinusoidal_positions<T>(plan.grid, cfg.embed_dim);
  const std::size_t per_sample = shape_size(sample_shape);
  const std::size_t per_tokens = plan.grid.count() * cfg.embed_dim;
  std::vector<T> data(count * per_tokens);
  for (std::size_t b = 0; b < count; ++b) {
    std::vector<T> sample(x.data().begin() + static_cast<std::ptrdiff_t>(b * per_sample),
                          x.data().begin() + static_cast<std::ptrdiff_t>((b + 1) * per_sample));
    const Tensor<T> tokens =
        embed_tokens(Tensor<T>(sample_shape, std::move(sample)), plan, cfg, weights, out.positional);
    std::copy(tokens.data().begin(), tokens.data().end(), data.begin() + static_cast<std::ptrdiff_t>(b * per_tokens));
  }
  out.tokens = Tensor<T>(Shape{count, plan.grid.count(), cfg.embed_dim}, std::move(data));
  return out;
}

}  // namespace

template <typename T>
TokenBatch<T> wavelet_embed_image(const Tensor<T>& x, const EmbedWeights<T>& weights,
                                  const EmbedConfig& cfg) {
  return embed_batch(x, weights, cfg, 3);
}

template <typename T>
TokenBatch<T> wavelet_embed_video(const Tensor<T>& x, const EmbedWeights<T>& weights,
                                  const EmbedConfig& cfg) {
  return embed_batch(x, weights, cfg, 4);
}

MaskPattern tube_mask(const TokenGrid& grid, double ratio, Rng& rng) {
  if (!(ratio >= 0.0 && ratio < 1.0)) throw ConfigError("mask ratio must lie in [0, 1)");
  const std::size_t cells = grid.spatial();
  if (cells == 0 || grid.temporal == 0) throw ConfigError("tube_mask: empty token grid");
  // The epsilon keeps products such as 0.29 * 100 from flooring one cell short.
  const auto masked_cells =
      static_cast<std::size_t>(std::floor(ratio * static_cast<double>(cells) + 1e-9));
  if (masked_cells >= cells) throw ConfigError("tube_mask: no visible token would remain");

  std::vector<std::size_t> order(cells);
  std::iota(order.begin(), order.end(), std::size_t{0});
  // Partial Fisher-Yates: the first `masked_cells` entries are a uniform sample.
  for (std::size_t i = 0; i < masked_cells; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(cells - i));
    std::swap(order[i], order[j]);
  }
  MaskPattern mask;
  mask.grid = grid;
  mask.spatial_mask.assign(cells, 0);
  for (std::size_t i = 0; i < masked_cells; ++i) mask.spatial_mask[order[i]] = 1;
  for (std::size_t token = 0; token < grid.count(); ++token) {
    (mask.spatial_mask[token % cells] ? mask.masked : mask.visible).push_back(token);
  }
  return mask;
}

#define RF_INSTANTIATE_EMBED(T)                                                                      \
  template Tensor<T> subband_reduce(const SubbandSet<T>&, ReduceMode);                              \
  template SubbandSet<T> subband_reduce_backward(const Tensor<T>&, const SubbandSet<T>&, ReduceMode);\
  template Tensor<T> wavelet_features(const Tensor<T>&, const EmbedPlan&, const EmbedConfig&);      \
  template Tensor<T> wavelet_features_backward(const Tensor<T>&, const EmbedPlan&, const EmbedConfig&);\
  template Tensor<T> extract_patches(const Tensor<T>&, const EmbedPlan&);                           \
  template Tensor<T> extract_patches_backward(const Tensor<T>&, const EmbedPlan&);                  \
  template Tensor<T> patch_vectors(const Tensor<T>&, const EmbedPlan&, const EmbedConfig&);         \
  template Tensor<T> patch_vectors_backward(const Tensor<T>&, const EmbedPlan&, const EmbedConfig&);\
  template Tensor<T> sinusoidal_positions(const TokenGrid&, std::size_t);                           \
  template EmbedWeights<T> init_embed_weights(const EmbedPlan&, const EmbedConfig&, Rng&);          \
  template Tensor<T> embed_tokens(const Tensor<T>&, const EmbedPlan&, const EmbedConfig&,           \
                                  const EmbedWeights<T>&, const Tensor<T>&);                        \
  template TokenBatch<T> wavelet_embed_image(const Tensor<T>&, const EmbedWeights<T>&,              \
                                             const EmbedConfig&);                                   \
  template TokenBatch<T> wavelet_embed_video(const Tensor<T>&, const EmbedWeights<T>&,              \
                                             const EmbedConfig&);

RF_INSTANTIATE_EMBED(float)
RF_INSTANTIATE_EMBED(double)

#undef RF_INSTANTIATE_EMBED

}  // namespace rf
