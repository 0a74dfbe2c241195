#include "robustformer/model.hpp"

#include <cmath>

namespace rf {

std::string_view to_string(ModelVariant v) {
  switch (v) {
    case ModelVariant::baseline: return "baseline";
    case ModelVariant::rf_a: return "RF-A";
    case ModelVariant::rf_aa: return "RF-AA";
    case ModelVariant::rf_o: return "RF-O";
    case ModelVariant::rf_oa: return "RF-OA";
    case ModelVariant::rf_c: return "RF-C";
    case ModelVariant::rf_ca: return "RF-CA";
    case ModelVariant::rf_i: return "RF-I";
    case ModelVariant::rf_ia: return "RF-IA";
  }
  return "?";
}

ModelVariant parse_model_variant(std::string_view text) {
  for (ModelVariant v : {ModelVariant::baseline, ModelVariant::rf_a, ModelVariant::rf_aa, ModelVariant::rf_o,
                         ModelVariant::rf_oa, ModelVariant::rf_c, ModelVariant::rf_ca, ModelVariant::rf_i,
                         ModelVariant::rf_ia}) {
    if (text == to_string(v)) return v;
  }
  throw ConfigError("unknown model variant '" + std::string(text) + "'");
}

EmbedConfig ModelConfig::resolved_embed() const {
  EmbedConfig out = embed;
  out.use_dwt = variant != ModelVariant::baseline;
  switch (variant) {
    case ModelVariant::rf_a:
    case ModelVariant::rf_aa:
    case ModelVariant::rf_i:
    case ModelVariant::rf_ia: out.mode = ReduceMode::avg; break;
    case ModelVariant::rf_c:
    case ModelVariant::rf_ca: out.mode = ReduceMode::concat; break;
    default: out.mode = ReduceMode::omit; break;
  }
  return out;
}

AttentionVariant ModelConfig::attention_variant() const {
  switch (variant) {
    case ModelVariant::rf_aa:
    case ModelVariant::rf_oa:
    case ModelVariant::rf_ca: return AttentionVariant::dwt_lowpass;
    case ModelVariant::rf_i: return AttentionVariant::idwt_ablation;
    case ModelVariant::rf_ia: return AttentionVariant::idwt_lowpass;
    default: return AttentionVariant::plain;
  }
}

namespace {

AttentionConfig attention_for(const ModelConfig& cfg, std::size_t dim, std::size_t heads, const char* what) {
  if (heads == 0 || dim % heads != 0) {
    throw ConfigError(std::string(what) + " width " + std::to_string(dim) + " is not divisible by " +
                      std::to_string(heads) + " heads");
  }
  AttentionConfig a;
  a.num_heads = heads;
  a.head_dim = dim / heads;
  a.variant = cfg.attention_variant();
  a.scale_mode = cfg.scale_mode;
  a.filter = cfg.attention_filter;
  return a;
}

}  // namespace

AttentionConfig ModelConfig::encoder_attention() const {
  return attention_for(*this, embed.embed_dim, encoder_heads, "encoder");
}

AttentionConfig ModelConfig::decoder_attention() const {
  return attention_for(*this, resolved_decoder_dim(), decoder_heads, "decoder");
}

void ModelConfig::validate() const {
  if (embed.embed_dim == 0) throw ConfigError("embed_dim must be positive");
  if (resolved_decoder_dim() == 0) throw ConfigError("decoder width must be positive");
  if (num_classes < 2) throw ConfigError("num_classes must be at least 2");
  encoder_attention().validate();
  if (decoder_depth > 0) decoder_attention().validate();
}

template <typename T>
std::vector<NamedParam<T>> ModelWeights<T>::parameters() {
  std::vector<NamedParam<T>> out;
  out.emplace_back("embed.weight", &embed.weight);
  out.emplace_back("embed.bias", &embed.bias);
  for (std::size_t i = 0; i < encoder.size(); ++i) {
    const std::string prefix = "encoder." + std::to_string(i) + ".";
    encoder[i].visit([&](const char* name, Tensor<T>& t) { out.emplace_back(prefix + name, &t); });
  }
  out.emplace_back("encoder.norm.gamma", &encoder_norm_gamma);
  out.emplace_back("encoder.norm.beta", &encoder_norm_beta);
  out.emplace_back("decoder.embed.weight", &decoder_embed_w);
  out.emplace_back("decoder.embed.bias", &decoder_embed_b);
  out.emplace_back("decoder.mask_token", &mask_token);
  for (std::size_t i = 0; i < decoder.size(); ++i) {
    const std::string prefix = "decoder." + std::to_string(i) + ".";
    decoder[i].visit([&](const char* name, Tensor<T>& t) { out.emplace_back(prefix + name, &t); });
  }
  out.emplace_back("decoder.norm.gamma", &decoder_norm_gamma);
  out.emplace_back("decoder.norm.beta", &decoder_norm_beta);
  out.emplace_back("decoder.pred.weight", &decoder_pred_w);
  out.emplace_back("decoder.pred.bias", &decoder_pred_b);
  out.emplace_back("head.weight", &head_w);
  out.emplace_back("head.bias", &head_b);
  return out;
}

template <typename T>
std::vector<std::pair<std::string, const Tensor<T>*>> ModelWeights<T>::parameters() const {
  auto mut = const_cast<ModelWeights<T>*>(this)->parameters();
  std::vector<std::pair<std::string, const Tensor<T>*>> out;
  out.reserve(mut.size());
  for (auto& [name, t] : mut) out.emplace_back(std::move(name), t);
  return out;
}

template <typename T>
std::size_t ModelWeights<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : parameters()) n += p.second->size();
  return n;
}

template <typename T>
ModelWeights<T> zeros_like(const ModelWeights<T>& w) {
  ModelWeights<T> out = w;
  for (auto& p : out.parameters()) p.second->fill(T{0});
  return out;
}

template <typename T>
ModelWeights<T> init_model_weights(const ModelConfig& cfg, const EmbedPlan& plan, std::uint64_t seed) {
  cfg.validate();
  const EmbedConfig embed = cfg.resolved_embed();
  const std::size_t e = embed.embed_dim;
  const std::size_t dd = cfg.resolved_decoder_dim();
  auto trunc = [](Tensor<T>& t, Rng& rng) {
    for (auto& v : t.data()) v = static_cast<T>(rng.truncated_normal(0.02));
  };

  ModelWeights<T> w;
  Rng embed_rng(seed, "init/embed");
  w.embed = init_embed_weights<T>(plan, embed, embed_rng);

  Rng enc_rng(seed, "init/encoder");
  for (std::size_t i = 0; i < cfg.encoder_depth; ++i) w.encoder.push_back(init_block_weights<T>(e, enc_rng));
  w.encoder_norm_gamma = Tensor<T>(Shape{e}, T{1});
  w.encoder_norm_beta = Tensor<T>(Shape{e});

  auto xavier = [](Tensor<T>& t, Rng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(t.dim(0) + t.dim(1)));
    for (auto& v : t.data()) v = static_cast<T>(rng.uniform(-bound, bound));
  };

  Rng dec_rng(seed, "init/decoder");
  w.decoder_embed_w = Tensor<T>(Shape{e, dd});
  xavier(w.decoder_embed_w, dec_rng);
  w.decoder_embed_b = Tensor<T>(Shape{dd});
  w.mask_token = Tensor<T>(Shape{dd});
  trunc(w.mask_token, dec_rng);
  for (std::size_t i = 0; i < cfg.decoder_depth; ++i) w.decoder.push_back(init_block_weights<T>(dd, dec_rng));
  w.decoder_norm_gamma = Tensor<T>(Shape{dd}, T{1});
  w.decoder_norm_beta = Tensor<T>(Shape{dd});
  w.decoder_pred_w = Tensor<T>(Shape{dd, plan.patch_dim});
  xavier(w.decoder_pred_w, dec_rng);
  w.decoder_pred_b = Tensor<T>(Shape{plan.patch_dim});

  Rng head_rng(seed, "init/head");
  w.head_w = Tensor<T>(Shape{e, cfg.num_classes});
  trunc(w.head_w, head_rng);
  w.head_b = Tensor<T>(Shape{cfg.num_classes});
  return w;
}

template <typename T>
T reconstruction_loss(const Tensor<T>& pred, const Tensor<T>& target, std::span<const std::size_t> masked,
                      bool norm_pix, Tensor<T>* dpred, Tensor<T>* dtarget) {
  if (pred.rank() != 2 || pred.shape() != target.shape()) {
    throw ShapeError("reconstruction_loss: prediction " + shape_string(pred.shape()) + " vs target " +
                     shape_string(target.shape()));
  }
  const std::size_t p = pred.dim(1);
  if (dpred) *dpred = Tensor<T>(pred.shape());
  if (dtarget) *dtarget = Tensor<T>(pred.shape());
  if (masked.empty()) return T{0};

  const T norm = T{1} / static_cast<T>(masked.size() * p);
  const T eps = T(1e-6);
  std::vector<T> t(p), diff(p);
  T total = 0;
  for (std::size_t r : masked) {
    if (r >= pred.dim(0)) throw ContractError("reconstruction_loss: masked row out of range");
    const auto pr = pred.row(r);
    const auto tr = target.row(r);
    T inv = 1;
    if (norm_pix) {
      T mean = 0;
      for (std::size_t j = 0; j < p; ++j) mean += tr[j];
      mean /= static_cast<T>(p);
      T var = 0;
      for (std::size_t j = 0; j < p; ++j) var += (tr[j] - mean) * (tr[j] - mean);
      var /= static_cast<T>(p);
      inv = T{1} / std::sqrt(var + eps);
      for (std::size_t j = 0; j < p; ++j) t[j] = (tr[j] - mean) * inv;
    } else {
      for (std::size_t j = 0; j < p; ++j) t[j] = tr[j];
    }
    for (std::size_t j = 0; j < p; ++j) {
      diff[j] = pr[j] - t[j];
      total += diff[j] * diff[j];
    }
    if (dpred) {
      auto g = dpred->row(r);
      for (std::size_t j = 0; j < p; ++j) g[j] = T{2} * norm * diff[j];
    }
    if (dtarget) {
      auto g = dtarget->row(r);
      // d/dt of the standardised target, as in a layer-norm backward pass.
      T mean_g = 0, mean_gt = 0;
      for (std::size_t j = 0; j < p; ++j) {
        const T gn = -T{2} * norm * diff[j];
        mean_g += gn;
        mean_gt += gn * t[j];
      }
      mean_g /= static_cast<T>(p);
      mean_gt /= static_cast<T>(p);
      for (std::size_t j = 0; j < p; ++j) {
        const T gn = -T{2} * norm * diff[j];
        g[j] = norm_pix ? inv * (gn - mean_g - t[j] * mean_gt) : gn;
      }
    }
  }
  return total * norm;
}

template <typename T>
std::size_t argmax(std::span<const T> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

namespace {

template <typename T>
Tensor<T> run_blocks(Tensor<T> h, const std::vector<BlockWeights<T>>& blocks, const AttentionConfig& cfg,
                     std::vector<BlockCache<T>>* caches) {
  if (caches) caches->resize(blocks.size());
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    h = transformer_block(h, blocks[i], cfg, caches ? &(*caches)[i] : nullptr);
  }
  return h;
}

template <typename T>
Tensor<T> run_blocks_backward(Tensor<T> g, const std::vector<BlockWeights<T>>& blocks, const AttentionConfig& cfg,
                              const std::vector<BlockCache<T>>& caches, std::vector<BlockWeights<T>>& grads) {
  for (std::size_t i = blocks.size(); i-- > 0;) {
    g = transformer_block_backward(caches[i], g, blocks[i], cfg, grads[i]);
  }
  return g;
}

}  // namespace

template <typename T>
struct MaeModel<T>::Trace {
  Tensor<T> tokens;
  std::vector<BlockCache<T>> blocks;
  LayerNormCache<T> norm;
  Tensor<T> pooled;
};

template <typename T>
MaeModel<T>::MaeModel(ModelConfig cfg, Shape sample_shape, std::uint64_t seed)
    : MaeModel(cfg, sample_shape, init_model_weights<T>(cfg, plan_embedding(sample_shape, cfg.resolved_embed()), seed)) {}

template <typename T>
MaeModel<T>::MaeModel(ModelConfig cfg, Shape sample_shape, ModelWeights<T> weights)
    : cfg_(std::move(cfg)), weights_(std::move(weights)) {
  cfg_.validate();
  embed_ = cfg_.resolved_embed();
  plan_ = plan_embedding(sample_shape, embed_);
  enc_attn_ = cfg_.encoder_attention();
  dec_attn_ = cfg_.decoder_attention();
  enc_pos_ = sinusoidal_positions<T>(plan_.grid, embed_.embed_dim);
  dec_pos_ = sinusoidal_positions<T>(plan_.grid, cfg_.resolved_decoder_dim());

  const ModelWeights<T> expected = init_model_weights<T>(cfg_, plan_, 0);
  const auto want = expected.parameters();
  const auto have = weights_.parameters();
  if (want.size() != have.size()) throw ShapeError("model weights do not match the configured architecture");
  for (std::size_t i = 0; i < want.size(); ++i) {
    if (want[i].first != have[i].first || want[i].second->shape() != have[i].second->shape()) {
      throw ShapeError("weight '" + have[i].first + "' has shape " + shape_string(have[i].second->shape()) +
                       ", expected '" + want[i].first + "' " + shape_string(want[i].second->shape()));
    }
  }
}

template <typename T>
std::size_t MaeModel<T>::batch_size(const Tensor<T>& batch) const {
  const Shape& s = plan_.input_shape;
  if (batch.rank() == s.size() && batch.shape() == s) return 1;
  if (batch.rank() != s.size() + 1 || !std::equal(s.begin(), s.end(), batch.shape().begin() + 1)) {
    throw ShapeError("batch shape " + shape_string(batch.shape()) + " does not match sample shape " +
                     shape_string(s));
  }
  return batch.dim(0);
}

template <typename T>
Tensor<T> MaeModel<T>::sample(const Tensor<T>& batch, std::size_t i) const {
  const std::size_t n = shape_size(plan_.input_shape);
  if (batch.rank() == plan_.input_shape.size()) return batch;
  const auto begin = batch.data().begin() + static_cast<std::ptrdiff_t>(i * n);
  return Tensor<T>(plan_.input_shape, std::vector<T>(begin, begin + static_cast<std::ptrdiff_t>(n)));
}

template <typename T>
std::vector<MaskPattern> MaeModel<T>::draw_masks(std::size_t batch, Rng& rng) const {
  std::vector<MaskPattern> out;
  out.reserve(batch);
  for (std::size_t i = 0; i < batch; ++i) out.push_back(tube_mask(plan_.grid, embed_.mask_ratio, rng));
  return out;
}

template <typename T>
T MaeModel<T>::pretrain_sample(const Tensor<T>& x, const MaskPattern& mask, T weight, ModelWeights<T>* grads,
                               Tensor<T>* input_grad) const {
  const ModelWeights<T>& w = weights_;
  const std::size_t n = plan_.grid.count();
  const std::size_t dd = cfg_.resolved_decoder_dim();
  const bool backward = grads != nullptr || input_grad != nullptr;

  const Tensor<T> patches = patch_vectors(x, plan_, embed_);
  Tensor<T> tokens = linear(patches, w.embed.weight, w.embed.bias);
  add_inplace(tokens, enc_pos_);
  const Tensor<T> visible = gather_rows(tokens, std::span<const std::size_t>(mask.visible));

  std::vector<BlockCache<T>> enc_caches, dec_caches;
  LayerNormCache<T> enc_norm, dec_norm;
  const Tensor<T> encoded = run_blocks(visible, w.encoder, enc_attn_, backward ? &enc_caches : nullptr);
  const Tensor<T> enc_out = layer_norm(encoded, w.encoder_norm_gamma, w.encoder_norm_beta, &enc_norm);
  const Tensor<T> dec_vis = linear(enc_out, w.decoder_embed_w, w.decoder_embed_b);

  Tensor<T> dec_in(Shape{n, dd});
  for (std::size_t r : mask.masked) std::copy(w.mask_token.data().begin(), w.mask_token.data().end(), dec_in.row(r).begin());
  scatter_add_rows(dec_in, dec_vis, std::span<const std::size_t>(mask.visible));
  add_inplace(dec_in, dec_pos_);

  const Tensor<T> decoded = run_blocks(dec_in, w.decoder, dec_attn_, backward ? &dec_caches : nullptr);
  const Tensor<T> dec_out = layer_norm(decoded, w.decoder_norm_gamma, w.decoder_norm_beta, &dec_norm);
  const Tensor<T> pred = linear(dec_out, w.decoder_pred_w, w.decoder_pred_b);

  Tensor<T> dpred, dtarget;
  const T loss = reconstruction_loss(pred, patches, std::span<const std::size_t>(mask.masked), cfg_.norm_pix,
                                     backward ? &dpred : nullptr, input_grad ? &dtarget : nullptr);
  if (!backward) return loss;

  for (auto& v : dpred.data()) v *= weight;
  ModelWeights<T> scratch;
  ModelWeights<T>& g = grads ? *grads : (scratch = zeros_like(w));

  const Tensor<T> d_dec_out = linear_backward(dec_out, w.decoder_pred_w, dpred, g.decoder_pred_w, g.decoder_pred_b);
  const Tensor<T> d_decoded =
      layer_norm_backward(d_dec_out, w.decoder_norm_gamma, dec_norm, g.decoder_norm_gamma, g.decoder_norm_beta);
  const Tensor<T> d_dec_in = run_blocks_backward(d_decoded, w.decoder, dec_attn_, dec_caches, g.decoder);
  for (std::size_t r : mask.masked) {
    const auto src = d_dec_in.row(r);
    for (std::size_t j = 0; j < dd; ++j) g.mask_token[j] += src[j];
  }
  const Tensor<T> d_dec_vis = gather_rows(d_dec_in, std::span<const std::size_t>(mask.visible));
  const Tensor<T> d_enc_out = linear_backward(enc_out, w.decoder_embed_w, d_dec_vis, g.decoder_embed_w, g.decoder_embed_b);
  const Tensor<T> d_encoded =
      layer_norm_backward(d_enc_out, w.encoder_norm_gamma, enc_norm, g.encoder_norm_gamma, g.encoder_norm_beta);
  const Tensor<T> d_visible = run_blocks_backward(d_encoded, w.encoder, enc_attn_, enc_caches, g.encoder);

  Tensor<T> d_tokens(Shape{n, embed_.embed_dim});
  scatter_add_rows(d_tokens, d_visible, std::span<const std::size_t>(mask.visible));
  Tensor<T> d_patches = linear_backward(patches, w.embed.weight, d_tokens, g.embed.weight, g.embed.bias);
  if (input_grad) {
    axpy(d_patches, weight, dtarget);
    *input_grad = patch_vectors_backward(d_patches, plan_, embed_);
  }
  return loss;
}

template <typename T>
T MaeModel<T>::pretrain_loss(const Tensor<T>& batch, const std::vector<MaskPattern>& masks, ModelWeights<T>* grads,
                             Tensor<T>* input_grad) const {
  const std::size_t b = batch_size(batch);
  if (masks.size() != b) throw ContractError("pretrain_loss: one mask per sample required");
  const T weight = T{1} / static_cast<T>(b);
  std::vector<T> in_grad;
  if (input_grad) in_grad.reserve(batch.size());
  T total = 0;
  for (std::size_t i = 0; i < b; ++i) {
    if (!(masks[i].grid == plan_.grid)) throw ContractError("pretrain_loss: mask grid does not match the model");
    Tensor<T> gi;
    total += pretrain_sample(sample(batch, i), masks[i], weight, grads, input_grad ? &gi : nullptr);
    if (input_grad) in_grad.insert(in_grad.end(), gi.data().begin(), gi.data().end());
  }
  if (input_grad) *input_grad = Tensor<T>(batch.shape(), std::move(in_grad));
  return total * weight;
}

template <typename T>
Tensor<T> MaeModel<T>::classifier_logits(const Tensor<T>& x, Trace* trace) const {
  const ModelWeights<T>& w = weights_;
  Tensor<T> tokens = linear(patch_vectors(x, plan_, embed_), w.embed.weight, w.embed.bias);
  add_inplace(tokens, enc_pos_);
  LayerNormCache<T> norm;
  const Tensor<T> encoded = run_blocks(tokens, w.encoder, enc_attn_, trace ? &trace->blocks : nullptr);
  const Tensor<T> out = layer_norm(encoded, w.encoder_norm_gamma, w.encoder_norm_beta, trace ? &trace->norm : nullptr);
  Tensor<T> pooled = mean(out, 0).reshaped(Shape{1, embed_.embed_dim});
  Tensor<T> logits = linear(pooled, w.head_w, w.head_b);
  if (trace) {
    trace->tokens = std::move(tokens);
    trace->pooled = std::move(pooled);
  }
  return logits;
}

template <typename T>
Tensor<T> MaeModel<T>::encode(const Tensor<T>& x) const {
  const ModelWeights<T>& w = weights_;
  Tensor<T> tokens = linear(patch_vectors(x, plan_, embed_), w.embed.weight, w.embed.bias);
  add_inplace(tokens, enc_pos_);
  const Tensor<T> encoded = run_blocks<T>(tokens, w.encoder, enc_attn_, nullptr);
  return layer_norm(encoded, w.encoder_norm_gamma, w.encoder_norm_beta, static_cast<LayerNormCache<T>*>(nullptr));
}

template <typename T>
T MaeModel<T>::finetune_loss(const Tensor<T>& batch, std::span<const int> labels, ModelWeights<T>* grads,
                             Tensor<T>* input_grad) const {
  const std::size_t b = batch_size(batch);
  if (labels.size() != b) throw DataError("finetune_loss: " + std::to_string(labels.size()) + " labels for " +
                                          std::to_string(b) + " samples");
  const std::size_t c = cfg_.num_classes;
  const bool backward = grads != nullptr || input_grad != nullptr;
  std::vector<Trace> traces(backward ? b : 0);
  Tensor<T> logits(Shape{b, c});
  std::vector<Tensor<T>> samples;
  for (std::size_t i = 0; i < b; ++i) {
    samples.push_back(sample(batch, i));
    const Tensor<T> li = classifier_logits(samples.back(), backward ? &traces[i] : nullptr);
    std::copy(li.data().begin(), li.data().end(), logits.row(i).begin());
  }
  Tensor<T> dlogits;
  const T loss = cross_entropy(logits, labels, backward ? &dlogits : nullptr);
  if (!backward) return loss;

  const ModelWeights<T>& w = weights_;
  ModelWeights<T> scratch;
  ModelWeights<T>& g = grads ? *grads : (scratch = zeros_like(w));
  const std::size_t n = plan_.grid.count();
  std::vector<T> in_grad;
  for (std::size_t i = 0; i < b; ++i) {
    const Trace& tr = traces[i];
    const Tensor<T> dl(Shape{1, c}, std::vector<T>(dlogits.row(i).begin(), dlogits.row(i).end()));
    const Tensor<T> dpool = linear_backward(tr.pooled, w.head_w, dl, g.head_w, g.head_b);
    const Tensor<T> dout = mean_backward(Shape{n, embed_.embed_dim}, dpool.reshaped(Shape{embed_.embed_dim}), 0);
    const Tensor<T> denc =
        layer_norm_backward(dout, w.encoder_norm_gamma, tr.norm, g.encoder_norm_gamma, g.encoder_norm_beta);
    const Tensor<T> dtok = run_blocks_backward(denc, w.encoder, enc_attn_, tr.blocks, g.encoder);
    const Tensor<T> patches = patch_vectors(samples[i], plan_, embed_);
    const Tensor<T> dpatch = linear_backward(patches, w.embed.weight, dtok, g.embed.weight, g.embed.bias);
    if (input_grad) {
      const Tensor<T> gi = patch_vectors_backward(dpatch, plan_, embed_);
      in_grad.insert(in_grad.end(), gi.data().begin(), gi.data().end());
    }
  }
  if (input_grad) *input_grad = Tensor<T>(batch.shape(), std::move(in_grad));
  return loss;
}

template <typename T>
Tensor<T> MaeModel<T>::logits(const Tensor<T>& batch) const {
  const std::size_t b = batch_size(batch);
  Tensor<T> out(Shape{b, cfg_.num_classes});
  for (std::size_t i = 0; i < b; ++i) {
    const Tensor<T> li = classifier_logits(sample(batch, i), nullptr);
    std::copy(li.data().begin(), li.data().end(), out.row(i).begin());
  }
  return out;
}

template <typename T>
Predictions<T> MaeModel<T>::predict(const Tensor<T>& batch) const {
  Predictions<T> p;
  p.logits = logits(batch);
  for (std::size_t i = 0; i < p.logits.dim(0); ++i) {
    p.classes.push_back(static_cast<int>(argmax<T>(p.logits.row(i))));
  }
  return p;
}

#define RF_INSTANTIATE_MODEL(T)                                                                           \
  template struct ModelWeights<T>;                                                                       \
  template ModelWeights<T> zeros_like(const ModelWeights<T>&);                                           \
  template ModelWeights<T> init_model_weights(const ModelConfig&, const EmbedPlan&, std::uint64_t);      \
  template T reconstruction_loss(const Tensor<T>&, const Tensor<T>&, std::span<const std::size_t>, bool, \
                                 Tensor<T>*, Tensor<T>*);                                                \
  template std::size_t argmax(std::span<const T>);                                                       \
  template class MaeModel<T>;

RF_INSTANTIATE_MODEL(float)
RF_INSTANTIATE_MODEL(double)

#undef RF_INSTANTIATE_MODEL

}  // namespace rf
