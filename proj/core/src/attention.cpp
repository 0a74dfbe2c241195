#include "robustformer/attention.hpp"

#include <cmath>

namespace rf {

std::string_view to_string(AttentionVariant v) {
  switch (v) {
    case AttentionVariant::plain: return "plain";
    case AttentionVariant::dwt_lowpass: return "dwt-lowpass";
    case AttentionVariant::idwt_ablation: return "idwt-ablation";
    case AttentionVariant::idwt_lowpass: return "idwt-lowpass";
  }
  return "?";
}

AttentionVariant parse_attention_variant(std::string_view text) {
  if (text == "plain") return AttentionVariant::plain;
  if (text == "dwt-lowpass") return AttentionVariant::dwt_lowpass;
  if (text == "idwt-ablation") return AttentionVariant::idwt_ablation;
  if (text == "idwt-lowpass") return AttentionVariant::idwt_lowpass;
  throw ConfigError("unknown attention variant '" + std::string(text) + "'");
}

std::string_view to_string(ScaleMode m) { return m == ScaleMode::paper ? "paper" : "reduced"; }

ScaleMode parse_scale_mode(std::string_view text) {
  if (text == "paper") return ScaleMode::paper;
  if (text == "reduced") return ScaleMode::reduced;
  throw ConfigError("unknown scale mode '" + std::string(text) + "' (expected paper|reduced)");
}

void AttentionConfig::validate() const {
  if (num_heads == 0 || head_dim == 0) throw ConfigError("attention needs at least one head of width >= 1");
  if (lowpass_features() && (head_dim < 2 || head_dim % 2 != 0)) {
    throw ConfigError("DWT attention requires an even head dimension >= 2, got " + std::to_string(head_dim));
  }
  (void)WaveletFilter::builtin(filter);
}

namespace {

thread_local std::uint64_t g_logit_macs = 0;

void require_same(const Shape& a, const Shape& b, const char* what) {
  if (a != b) throw ContractError(std::string(what) + ": " + shape_string(a) + " vs " + shape_string(b));
}

// Projection onto the lowpass (and optionally highpass) span along the token
// axis: L^T L m (+ H^T H m). Symmetric, so it is also its own adjoint.
template <typename T>
Tensor<T> smooth_tokens(const Tensor<T>& m, const AttentionConfig& cfg, const WaveletFilter& filter) {
  const std::size_t n = m.dim(0);
  const Tensor<T> low = construct_matrix<T>(filter, Band::low, n, Boundary::zero).matrix;
  Tensor<T> out = mode_product_backward(mode_product(m, low, 0), low, 0);
  if (cfg.retain_high_bands) {
    const Tensor<T> high = construct_matrix<T>(filter, Band::high, n, Boundary::zero).matrix;
    add_inplace(out, mode_product_backward(mode_product(m, high, 0), high, 0));
  }
  return out;
}

template <typename T>
Tensor<T> transform_qk(const Tensor<T>& m, const AttentionConfig& cfg, const WaveletFilter& filter) {
  Tensor<T> out = cfg.token_smoothing() ? smooth_tokens(m, cfg, filter) : m;
  if (cfg.lowpass_features()) out = dwt_lowpass_features(out, filter);
  return out;
}

template <typename T>
Tensor<T> transform_qk_backward(const Tensor<T>& grad, std::size_t d, const AttentionConfig& cfg,
                                const WaveletFilter& filter) {
  Tensor<T> out = cfg.lowpass_features() ? dwt_lowpass_features_backward(grad, d, filter) : grad;
  if (cfg.token_smoothing()) out = smooth_tokens(out, cfg, filter);
  return out;
}

template <typename T>
T logit_scale(const AttentionConfig& cfg, std::size_t d_k, std::size_t width) {
  const std::size_t denom = cfg.scale_mode == ScaleMode::paper ? d_k : width;
  return T{1} / std::sqrt(static_cast<T>(denom));
}

// Columns [begin, begin + width) of a matrix.
template <typename T>
Tensor<T> column_block(const Tensor<T>& m, std::size_t begin, std::size_t width) {
  const std::size_t n = m.dim(0), c = m.dim(1);
  Tensor<T> out(Shape{n, width});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < width; ++j) out.at(i, j) = m[i * c + begin + j];
  return out;
}

template <typename T>
void set_column_block(Tensor<T>& m, const Tensor<T>& block, std::size_t begin) {
  const std::size_t n = m.dim(0), c = m.dim(1), width = block.dim(1);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < width; ++j) m[i * c + begin + j] = block.at(i, j);
}

}  // namespace

std::uint64_t logit_mac_count() { return g_logit_macs; }
void reset_logit_mac_count() { g_logit_macs = 0; }

template <typename T>
Tensor<T> dwt_lowpass_features(const Tensor<T>& m, const WaveletFilter& filter) {
  if (m.rank() != 2 || m.dim(1) < 2) {
    throw ContractError("dwt_lowpass_features: need an (n x d) matrix with d >= 2");
  }
  const Tensor<T> low = construct_matrix<T>(filter, Band::low, m.dim(1), Boundary::zero).matrix;
  return mode_product(m, low, 1);
}

template <typename T>
Tensor<T> dwt_lowpass_features_backward(const Tensor<T>& grad, std::size_t d, const WaveletFilter& filter) {
  const Tensor<T> low = construct_matrix<T>(filter, Band::low, d, Boundary::zero).matrix;
  return mode_product_backward(grad, low, 1);
}

template <typename T>
Tensor<T> attention_scores(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v,
                           const AttentionConfig& cfg, AttentionCache<T>* cache) {
  if (q.rank() != 2) throw ContractError("attention_scores: Q must be (n x d_k)");
  require_same(q.shape(), k.shape(), "attention_scores Q/K");
  require_same(q.shape(), v.shape(), "attention_scores Q/V");
  const std::size_t n = q.dim(0), d_k = q.dim(1);
  if (cfg.lowpass_features() && (d_k < 2 || d_k % 2 != 0)) {
    throw ContractError("attention_scores: DWT attention needs an even d_k");
  }
  const WaveletFilter filter = WaveletFilter::builtin(cfg.filter);
  Tensor<T> q_eff = transform_qk(q, cfg, filter);
  Tensor<T> k_eff = transform_qk(k, cfg, filter);
  const std::size_t width = q_eff.dim(1);

  Tensor<T> logits = matmul_nt(q_eff, k_eff);
  g_logit_macs += static_cast<std::uint64_t>(n) * n * width;
  const T s = logit_scale<T>(cfg, d_k, width);
  for (auto& x : logits.data()) x *= s;
  Tensor<T> weights = softmax(logits, 1);
  Tensor<T> out = matmul(weights, v);
  if (cache) {
    cache->q_eff = std::move(q_eff);
    cache->k_eff = std::move(k_eff);
    cache->weights = std::move(weights);
  }
  return out;
}

template <typename T>
AttentionGrads<T> attention_scores_backward(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v,
                                            const AttentionCache<T>& cache, const Tensor<T>& grad,
                                            const AttentionConfig& cfg) {
  (void)k;
  require_same(grad.shape(), v.shape(), "attention_scores_backward gradient");
  const std::size_t d_k = q.dim(1);
  const std::size_t width = cache.q_eff.dim(1);
  const WaveletFilter filter = WaveletFilter::builtin(cfg.filter);

  AttentionGrads<T> g;
  g.dv = matmul_tn(cache.weights, grad);
  Tensor<T> dlogits = softmax_backward(cache.weights, matmul_nt(grad, v), 1);
  const T s = logit_scale<T>(cfg, d_k, width);
  for (auto& x : dlogits.data()) x *= s;
  g.dq = transform_qk_backward(matmul(dlogits, cache.k_eff), d_k, cfg, filter);
  g.dk = transform_qk_backward(matmul_tn(dlogits, cache.q_eff), d_k, cfg, filter);
  return g;
}

template <typename T>
BlockWeights<T> BlockWeights<T>::zeros(std::size_t dim, std::size_t hidden) {
  BlockWeights w;
  w.ln1_gamma = w.ln1_beta = w.ln2_gamma = w.ln2_beta = Tensor<T>(Shape{dim});
  w.wq = w.wk = w.wv = w.wo = Tensor<T>(Shape{dim, dim});
  w.bq = w.bk = w.bv = w.bo = w.b2 = Tensor<T>(Shape{dim});
  w.w1 = Tensor<T>(Shape{dim, hidden});
  w.b1 = Tensor<T>(Shape{hidden});
  w.w2 = Tensor<T>(Shape{hidden, dim});
  return w;
}

template <typename T>
BlockWeights<T> init_block_weights(std::size_t dim, Rng& rng) {
  BlockWeights<T> w = BlockWeights<T>::zeros(dim, 4 * dim);
  w.ln1_gamma.fill(T{1});
  w.ln2_gamma.fill(T{1});
  // Xavier-uniform over (fan_in, fan_out).
  for (Tensor<T>* m : {&w.wq, &w.wk, &w.wv, &w.wo, &w.w1, &w.w2}) {
    const double bound = std::sqrt(6.0 / static_cast<double>(m->dim(0) + m->dim(1)));
    for (auto& x : m->data()) x = static_cast<T>(rng.uniform(-bound, bound));
  }
  return w;
}

template <typename T>
Tensor<T> multi_head_attention(const Tensor<T>& x, const BlockWeights<T>& w, const AttentionConfig& cfg,
                               MhaCache<T>* cache) {
  cfg.validate();
  const std::size_t dim = cfg.model_dim();
  if (x.rank() != 2 || x.dim(1) != dim) {
    throw ContractError("multi_head_attention: input " + shape_string(x.shape()) +
                        " does not match model dimension " + std::to_string(dim));
  }
  const std::size_t n = x.dim(0);
  Tensor<T> q = linear(x, w.wq, w.bq);
  Tensor<T> k = linear(x, w.wk, w.bk);
  Tensor<T> v = linear(x, w.wv, w.bv);
  Tensor<T> concat(Shape{n, dim});
  std::vector<AttentionCache<T>> heads(cfg.num_heads);
  for (std::size_t h = 0; h < cfg.num_heads; ++h) {
    const std::size_t begin = h * cfg.head_dim;
    const Tensor<T> out = attention_scores(column_block(q, begin, cfg.head_dim), column_block(k, begin, cfg.head_dim),
                                           column_block(v, begin, cfg.head_dim), cfg, cache ? &heads[h] : nullptr);
    set_column_block(concat, out, begin);
  }
  Tensor<T> out = linear(concat, w.wo, w.bo);
  if (cache) {
    cache->x = x;
    cache->q = std::move(q);
    cache->k = std::move(k);
    cache->v = std::move(v);
    cache->concat = std::move(concat);
    cache->heads = std::move(heads);
  }
  return out;
}

template <typename T>
Tensor<T> multi_head_attention(const TokenBatch<T>& x, const BlockWeights<T>& w,
                               const AttentionConfig& cfg) {
  if (x.tokens.rank() != 3) throw ContractError("multi_head_attention: token batch must be rank 3");
  const std::size_t b = x.tokens.dim(0), n = x.tokens.dim(1), d = x.tokens.dim(2);
  std::vector<T> data;
  data.reserve(b * n * d);
  for (std::size_t i = 0; i < b; ++i) {
    std::vector<T> sample(x.tokens.data().begin() + static_cast<std::ptrdiff_t>(i * n * d),
                          x.tokens.data().begin() + static_cast<std::ptrdiff_t>((i + 1) * n * d));
    const Tensor<T> out = multi_head_attention(Tensor<T>(Shape{n, d}, std::move(sample)), w, cfg);
    data.insert(data.end(), out.data().begin(), out.data().end());
  }
  return Tensor<T>(Shape{b, n, d}, std::move(data));
}

template <typename T>
Tensor<T> multi_head_attention_backward(const MhaCache<T>& cache, const Tensor<T>& grad,
                                        const BlockWeights<T>& w, const AttentionConfig& cfg,
                                        BlockWeights<T>& grads) {
  const Tensor<T> dconcat = linear_backward(cache.concat, w.wo, grad, grads.wo, grads.bo);
  Tensor<T> dq(cache.q.shape()), dk(cache.k.shape()), dv(cache.v.shape());
  for (std::size_t h = 0; h < cfg.num_heads; ++h) {
    const std::size_t begin = h * cfg.head_dim;
    const AttentionGrads<T> g = attention_scores_backward(
        column_block(cache.q, begin, cfg.head_dim), column_block(cache.k, begin, cfg.head_dim),
        column_block(cache.v, begin, cfg.head_dim), cache.heads[h], column_block(dconcat, begin, cfg.head_dim), cfg);
    set_column_block(dq, g.dq, begin);
    set_column_block(dk, g.dk, begin);
    set_column_block(dv, g.dv, begin);
  }
  Tensor<T> dx = linear_backward(cache.x, w.wq, dq, grads.wq, grads.bq);
  add_inplace(dx, linear_backward(cache.x, w.wk, dk, grads.wk, grads.bk));
  add_inplace(dx, linear_backward(cache.x, w.wv, dv, grads.wv, grads.bv));
  return dx;
}

template <typename T>
Tensor<T> transformer_block(const Tensor<T>& x, const BlockWeights<T>& w, const AttentionConfig& cfg,
                            BlockCache<T>* cache) {
  LayerNormCache<T> ln1, ln2;
  MhaCache<T> attn;
  const Tensor<T> h1 = layer_norm(x, w.ln1_gamma, w.ln1_beta, cache ? &ln1 : nullptr);
  Tensor<T> x1 = add(x, multi_head_attention(h1, w, cfg, cache ? &attn : nullptr));
  Tensor<T> h2 = layer_norm(x1, w.ln2_gamma, w.ln2_beta, cache ? &ln2 : nullptr);
  Tensor<T> pre_act = linear(h2, w.w1, w.b1);
  Tensor<T> act = gelu(pre_act);
  Tensor<T> out = add(x1, linear(act, w.w2, w.b2));
  if (cache) {
    cache->x = x;
    cache->ln1 = std::move(ln1);
    cache->ln2 = std::move(ln2);
    cache->attn = std::move(attn);
    cache->h2 = std::move(h2);
    cache->pre_act = std::move(pre_act);
    cache->act = std::move(act);
  }
  return out;
}

template <typename T>
Tensor<T> transformer_block_backward(const BlockCache<T>& cache, const Tensor<T>& grad,
                                     const BlockWeights<T>& w, const AttentionConfig& cfg,
                                     BlockWeights<T>& grads) {
  const Tensor<T> dact = linear_backward(cache.act, w.w2, grad, grads.w2, grads.b2);
  const Tensor<T> dpre = gelu_backward(cache.pre_act, dact);
  const Tensor<T> dh2 = linear_backward(cache.h2, w.w1, dpre, grads.w1, grads.b1);
  Tensor<T> dx1 = add(grad, layer_norm_backward(dh2, w.ln2_gamma, cache.ln2, grads.ln2_gamma, grads.ln2_beta));
  const Tensor<T> dh1 = multi_head_attention_backward(cache.attn, dx1, w, cfg, grads);
  add_inplace(dx1, layer_norm_backward(dh1, w.ln1_gamma, cache.ln1, grads.ln1_gamma, grads.ln1_beta));
  return dx1;
}

#define RF_INSTANTIATE_ATTENTION(T)                                                                   \
  template struct BlockWeights<T>;                                                                   \
  template Tensor<T> dwt_lowpass_features(const Tensor<T>&, const WaveletFilter&);                   \
  template Tensor<T> dwt_lowpass_features_backward(const Tensor<T>&, std::size_t, const WaveletFilter&);\
  template Tensor<T> attention_scores(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,          \
                                      const AttentionConfig&, AttentionCache<T>*);                   \
  template AttentionGrads<T> attention_scores_backward(const Tensor<T>&, const Tensor<T>&,           \
                                                       const Tensor<T>&, const AttentionCache<T>&,   \
                                                       const Tensor<T>&, const AttentionConfig&);    \
  template BlockWeights<T> init_block_weights(std::size_t, Rng&);                                    \
  template Tensor<T> multi_head_attention(const Tensor<T>&, const BlockWeights<T>&,                  \
                                          const AttentionConfig&, MhaCache<T>*);                     \
  template Tensor<T> multi_head_attention(const TokenBatch<T>&, const BlockWeights<T>&,              \
                                          const AttentionConfig&);                                   \
  template Tensor<T> multi_head_attention_backward(const MhaCache<T>&, const Tensor<T>&,             \
                                                   const BlockWeights<T>&, const AttentionConfig&,   \
                                                   BlockWeights<T>&);                                \
  template Tensor<T> transformer_block(const Tensor<T>&, const BlockWeights<T>&,                     \
                                       const AttentionConfig&, BlockCache<T>*);                      \
  template Tensor<T> transformer_block_backward(const BlockCache<T>&, const Tensor<T>&,              \
                                                const BlockWeights<T>&, const AttentionConfig&,      \
                                                BlockWeights<T>&);

RF_INSTANTIATE_ATTENTION(float)
RF_INSTANTIATE_ATTENTION(double)

#undef RF_INSTANTIATE_ATTENTION

}  // namespace rf
