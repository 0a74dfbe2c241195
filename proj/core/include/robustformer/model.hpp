#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "robustformer/attention.hpp"
#include "robustformer/patch_embed.hpp"
#include "robustformer/tensor.hpp"

namespace rf {

enum class ModelVariant { baseline, rf_a, rf_aa, rf_o, rf_oa, rf_c, rf_ca, rf_i, rf_ia };

std::string_view to_string(ModelVariant v);
ModelVariant parse_model_variant(std::string_view text);

struct ModelConfig {
  ModelVariant variant = ModelVariant::rf_o;
  /// use_dwt and mode are overridden by the variant; see resolved_embed().
  EmbedConfig embed;
  std::size_t encoder_depth = 2;
  std::size_t encoder_heads = 2;
  std::size_t decoder_depth = 4;
  std::size_t decoder_heads = 1;
  /// 0 means half the encoder width.
  std::size_t decoder_dim = 0;
  bool norm_pix = true;
  std::size_t num_classes = 10;
  ScaleMode scale_mode = ScaleMode::paper;
  std::string attention_filter = "haar";

  EmbedConfig resolved_embed() const;
  AttentionVariant attention_variant() const;
  std::size_t resolved_decoder_dim() const { return decoder_dim ? decoder_dim : embed.embed_dim / 2; }
  AttentionConfig encoder_attention() const;
  AttentionConfig decoder_attention() const;
  /// Throws ConfigError on inconsistent widths / head counts.
  void validate() const;
};

template <typename T>
using NamedParam = std::pair<std::string, Tensor<T>*>;

template <typename T>
struct ModelWeights {
  EmbedWeights<T> embed;
  std::vector<BlockWeights<T>> encoder;
  Tensor<T> encoder_norm_gamma, encoder_norm_beta;

  Tensor<T> decoder_embed_w, decoder_embed_b;
  Tensor<T> mask_token;
  std::vector<BlockWeights<T>> decoder;
  Tensor<T> decoder_norm_gamma, decoder_norm_beta;
  Tensor<T> decoder_pred_w, decoder_pred_b;

  Tensor<T> head_w, head_b;

  /// Every trainable tensor exactly once, in a fixed order.
  std::vector<NamedParam<T>> parameters();
  std::vector<std::pair<std::string, const Tensor<T>*>> parameters() const;
  std::size_t parameter_count() const;
};

template <typename T>
ModelWeights<T> zeros_like(const ModelWeights<T>& w);

template <typename T>
ModelWeights<T> init_model_weights(const ModelConfig& cfg, const EmbedPlan& plan, std::uint64_t seed);

/// Mean squared error over the masked rows of (N x P) predictions. With
/// norm_pix each target row is standardised as (t - mean) / sqrt(var + 1e-6).
/// Writes d(loss)/d(pred) and d(loss)/d(target) when requested.
template <typename T>
T reconstruction_loss(const Tensor<T>& pred, const Tensor<T>& target, std::span<const std::size_t> masked,
                      bool norm_pix, Tensor<T>* dpred, Tensor<T>* dtarget);

/// Argmax with ties going to the lowest index.
template <typename T>
std::size_t argmax(std::span<const T> values);

template <typename T>
struct Predictions {
  std::vector<int> classes;
  Tensor<T> logits;  // (batch x classes)
};

template <typename T>
class MaeModel {
 public:
  /// `sample_shape` is one input: (C, H, W) or (C, T, H, W).
  MaeModel(ModelConfig cfg, Shape sample_shape, std::uint64_t seed);
  MaeModel(ModelConfig cfg, Shape sample_shape, ModelWeights<T> weights);

  const ModelConfig& config() const { return cfg_; }
  const EmbedConfig& embed_config() const { return embed_; }
  const EmbedPlan& plan() const { return plan_; }
  const Shape& sample_shape() const { return plan_.input_shape; }
  ModelWeights<T>& weights() { return weights_; }
  const ModelWeights<T>& weights() const { return weights_; }

  std::size_t batch_size(const Tensor<T>& batch) const;
  Tensor<T> sample(const Tensor<T>& batch, std::size_t i) const;

  /// One mask per sample drawn from rng in batch order.
  std::vector<MaskPattern> draw_masks(std::size_t batch, Rng& rng) const;

  /// Mean over the batch of the masked reconstruction loss. Gradients are
  /// accumulated into `grads` and, when given, written to `input_grad`.
  T pretrain_loss(const Tensor<T>& batch, const std::vector<MaskPattern>& masks, ModelWeights<T>* grads,
                  Tensor<T>* input_grad = nullptr) const;
  T pretrain_loss(const Tensor<T>& batch, Rng& rng, ModelWeights<T>* grads,
                  Tensor<T>* input_grad = nullptr) const {
    return pretrain_loss(batch, draw_masks(batch_size(batch), rng), grads, input_grad);
  }

  /// Mean cross-entropy of the classifier over the batch.
  T finetune_loss(const Tensor<T>& batch, std::span<const int> labels, ModelWeights<T>* grads,
                  Tensor<T>* input_grad = nullptr) const;

  Tensor<T> logits(const Tensor<T>& batch) const;
  Predictions<T> predict(const Tensor<T>& batch) const;

  /// Encoder output (after the final layer norm) for all tokens of one sample.
  Tensor<T> encode(const Tensor<T>& sample) const;

 private:
  T pretrain_sample(const Tensor<T>& x, const MaskPattern& mask, T weight, ModelWeights<T>* grads,
                    Tensor<T>* input_grad) const;
  struct Trace;
  Tensor<T> classifier_logits(const Tensor<T>& x, Trace* trace) const;

  ModelConfig cfg_;
  EmbedConfig embed_;
  EmbedPlan plan_;
  AttentionConfig enc_attn_;
  AttentionConfig dec_attn_;
  Tensor<T> enc_pos_;
  Tensor<T> dec_pos_;
  ModelWeights<T> weights_;
};

}  // namespace rf
