#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "robustformer/ops.hpp"
#include "robustformer/patch_embed.hpp"
#include "robustformer/rng.hpp"
#include "robustformer/tensor.hpp"
#include "robustformer/wavelet.hpp"

namespace rf {

// plain          softmax(Q K^T / sqrt(d_k)) V
// dwt_lowpass    Q and K replaced by their lowpass DWT along the feature
//                axis (width ceil(d_k/2)); V untouched, so no inverse step.
// idwt_ablation  Q and K decomposed along the token axis, high bands zeroed
//                (unless retain_high_bands), inverse-transformed back to
//                n x d_k, then plain attention.
// idwt_lowpass   idwt_ablation smoothing followed by the dwt_lowpass logits.
enum class AttentionVariant { plain, dwt_lowpass, idwt_ablation, idwt_lowpass };
enum class ScaleMode { paper, reduced };

std::string_view to_string(AttentionVariant v);
AttentionVariant parse_attention_variant(std::string_view text);
std::string_view to_string(ScaleMode m);
ScaleMode parse_scale_mode(std::string_view text);

struct AttentionConfig {
  std::size_t num_heads = 1;
  std::size_t head_dim = 2;
  AttentionVariant variant = AttentionVariant::plain;
  /// paper: 1/sqrt(d_k). reduced: 1/sqrt(width of the transformed Q/K).
  ScaleMode scale_mode = ScaleMode::paper;
  std::string filter = "haar";
  /// idwt variants only: keep the high bands, making the smoothing an identity.
  bool retain_high_bands = false;

  std::size_t model_dim() const { return num_heads * head_dim; }
  bool lowpass_features() const {
    return variant == AttentionVariant::dwt_lowpass || variant == AttentionVariant::idwt_lowpass;
  }
  bool token_smoothing() const {
    return variant == AttentionVariant::idwt_ablation || variant == AttentionVariant::idwt_lowpass;
  }
  /// Throws ConfigError for zero heads, or odd / tiny d_k under DWT variants.
  void validate() const;
};

/// Lowpass analysis matrix applied along the feature (column) axis:
/// (n x d) -> (n x ceil(d/2)). Zero boundary.
template <typename T>
Tensor<T> dwt_lowpass_features(const Tensor<T>& m, const WaveletFilter& filter);
template <typename T>
Tensor<T> dwt_lowpass_features_backward(const Tensor<T>& grad, std::size_t d, const WaveletFilter& filter);

template <typename T>
struct AttentionCache {
  Tensor<T> q_eff;    // transformed queries used in the logits
  Tensor<T> k_eff;
  Tensor<T> weights;  // row-stochastic (n x n)
};

template <typename T>
struct AttentionGrads {
  Tensor<T> dq, dk, dv;
};

/// Single-head attention for (n x d_k) Q, K, V under cfg.variant.
template <typename T>
Tensor<T> attention_scores(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v,
                           const AttentionConfig& cfg, AttentionCache<T>* cache = nullptr);
template <typename T>
AttentionGrads<T> attention_scores_backward(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v,
                                            const AttentionCache<T>& cache, const Tensor<T>& grad,
                                            const AttentionConfig& cfg);

/// Multiply-adds spent forming attention logits on this thread since the
/// last reset: n_q * n_k * (width of transformed Q/K) per head call.
std::uint64_t logit_mac_count();
void reset_logit_mac_count();

template <typename T>
struct BlockWeights {
  Tensor<T> ln1_gamma, ln1_beta;
  Tensor<T> wq, bq, wk, bk, wv, bv, wo, bo;
  Tensor<T> ln2_gamma, ln2_beta;
  Tensor<T> w1, b1, w2, b2;

  /// All-zero weights (layer-norm scales included) of the given width.
  static BlockWeights zeros(std::size_t dim, std::size_t hidden);

  template <typename F>
  void visit(F&& f) {
    visit_impl(*this, f);
  }
  template <typename F>
  void visit(F&& f) const {
    visit_impl(*this, f);
  }

 private:
  template <typename Self, typename F>
  static void visit_impl(Self& s, F& f) {
    f("ln1.gamma", s.ln1_gamma);
    f("ln1.beta", s.ln1_beta);
    f("attn.wq", s.wq);
    f("attn.bq", s.bq);
    f("attn.wk", s.wk);
    f("attn.bk", s.bk);
    f("attn.wv", s.wv);
    f("attn.bv", s.bv);
    f("attn.wo", s.wo);
    f("attn.bo", s.bo);
    f("ln2.gamma", s.ln2_gamma);
    f("ln2.beta", s.ln2_beta);
    f("mlp.w1", s.w1);
    f("mlp.b1", s.b1);
    f("mlp.w2", s.w2);
    f("mlp.b2", s.b2);
  }
};

/// Truncated-normal(0.02) projections, zero biases, unit layer-norm scales.
/// MLP hidden width is 4 x dim.
template <typename T>
BlockWeights<T> init_block_weights(std::size_t dim, Rng& rng);

template <typename T>
struct MhaCache {
  Tensor<T> x, q, k, v, concat;
  std::vector<AttentionCache<T>> heads;
};

/// x is (n x model_dim).
template <typename T>
Tensor<T> multi_head_attention(const Tensor<T>& x, const BlockWeights<T>& w, const AttentionConfig& cfg,
                               MhaCache<T>* cache = nullptr);
/// Batched form over a TokenBatch: returns (batch x n x model_dim).
template <typename T>
Tensor<T> multi_head_attention(const TokenBatch<T>& x, const BlockWeights<T>& w,
                               const AttentionConfig& cfg);
template <typename T>
Tensor<T> multi_head_attention_backward(const MhaCache<T>& cache, const Tensor<T>& grad,
                                        const BlockWeights<T>& w, const AttentionConfig& cfg,
                                        BlockWeights<T>& grads);

template <typename T>
struct BlockCache {
  Tensor<T> x;
  LayerNormCache<T> ln1, ln2;
  MhaCache<T> attn;
  Tensor<T> h2, pre_act, act;
};

/// Pre-norm block: x + MHA(LN(x)), then + MLP(LN(.)) with a GELU MLP.
template <typename T>
Tensor<T> transformer_block(const Tensor<T>& x, const BlockWeights<T>& w, const AttentionConfig& cfg,
                            BlockCache<T>* cache = nullptr);
/// Accumulates parameter gradients into `grads`; returns d(loss)/dx.
template <typename T>
Tensor<T> transformer_block_backward(const BlockCache<T>& cache, const Tensor<T>& grad,
                                     const BlockWeights<T>& w, const AttentionConfig& cfg,
                                     BlockWeights<T>& grads);

}  // namespace rf
