#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "robustformer/attention.hpp"
#include "robustformer/gradcheck.hpp"
#include "robustformer/harness/commands.hpp"
#include "robustformer/harness/config.hpp"
#include "robustformer/metrics.hpp"
#include "robustformer/model.hpp"
#include "robustformer/ops.hpp"
#include "robustformer/patch_embed.hpp"
#include "robustformer/wavelet.hpp"

namespace fs = std::filesystem;
using namespace rf;
using TensorD = Tensor<double>;

namespace {

// Pinned tolerances and budgets.
constexpr double kRoundTripTol = 1e-12;
constexpr double kParsevalTol = 1e-10;
constexpr double kWaveletSeconds = 5.0;
constexpr double kGradTol = 1e-5;
constexpr double kGradEps = 1e-5;
constexpr double kGradSeconds = 120.0;
constexpr double kStochasticTol = 1e-6;
constexpr double kDuplicateTol = 1e-5;
constexpr double kRetainedTol = 1e-10;
constexpr std::size_t kMaskDraws = 1000;
constexpr double kDigitsCleanMin = 90.0;
constexpr int kDigitsSeverityWins = 3;
constexpr double kDigitsSeconds = 30 * 60.0;
constexpr double kVideoCleanMin = 95.0;
constexpr int kVideoSeedWins = 2;
constexpr double kVideoSeconds = 20 * 60.0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

TensorD random_tensor(const Shape& shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  TensorD t(shape);
  for (auto& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

double max_abs_diff(const TensorD& a, const TensorD& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

// ---------------------------------------------------------------- 1

Outcome wavelet_correctness() {
  const auto start = Clock::now();
  const WaveletFilter haar = WaveletFilter::builtin("haar");
  Rng rng(1, "acceptance/wavelet");
  double worst_rt = 0, worst_energy = 0;
  for (std::size_t trial = 0; trial < 100; ++trial) {
    const std::size_t rank = 1 + trial % 3;
    Shape shape;
    for (std::size_t a = 0; a < rank; ++a) shape.push_back(2 * (1 + rng.below(4)));
    const TensorD x = random_tensor(shape, rng);
    std::vector<std::size_t> axes(rank);
    for (std::size_t a = 0; a < rank; ++a) axes[a] = a;
    for (Boundary b : {Boundary::zero, Boundary::periodic}) {
      const SubbandSet<double> bands = dwt(x, axes, haar, b);
      worst_rt = std::max(worst_rt, max_abs_diff(idwt(bands, haar, b), x));
      if (b == Boundary::periodic) {
        double ex = 0, eb = 0;
        for (double v : x.data()) ex += v * v;
        for (const auto& band : bands.bands)
          for (double v : band.data()) eb += v * v;
        worst_energy = std::max(worst_energy, std::abs(eb - ex) / ex);
      }
    }
  }
  const double secs = seconds_since(start);
  return {worst_rt <= kRoundTripTol && worst_energy <= kParsevalTol && secs < kWaveletSeconds,
          "round-trip " + fmt("%.3g", worst_rt) + " (<= 1e-12), energy " + fmt("%.3g", worst_energy) +
              " (<= 1e-10), " + fmt("%.2f", secs) + " s (< 5 s)"};
}

// ---------------------------------------------------------------- 2

Outcome analysis_matrices() {
  const WaveletFilter haar = WaveletFilter::builtin("haar");
  const double r = haar.lowpass[0];
  const TensorD k4 = TensorD::matrix({{r, r, 0, 0}, {0, 0, r, r}});
  const TensorD k5_zero = TensorD::matrix({{r, r, 0, 0, 0}, {0, 0, r, r, 0}, {0, 0, 0, 0, r}});
  // Periodic: the last row's second tap wraps to column 0.
  const TensorD k5_periodic = TensorD::matrix({{r, r, 0, 0, 0}, {0, 0, r, r, 0}, {r, 0, 0, 0, r}});
  const bool exact_r = r == 1.0 / std::numbers::sqrt2;
  std::vector<std::string> failures;
  auto expect = [&](std::size_t k, Boundary b, const TensorD& want, const char* name) {
    if (!(construct_matrix<double>(haar, Band::low, k, b).matrix == want)) failures.push_back(name);
  };
  expect(4, Boundary::zero, k4, "k=4 zero");
  expect(4, Boundary::periodic, k4, "k=4 periodic");
  expect(5, Boundary::zero, k5_zero, "k=5 zero");
  expect(5, Boundary::periodic, k5_periodic, "k=5 periodic");
  std::string detail = "k=4 and k=5 Haar lowpass, zero and periodic, exact equality";
  if (!exact_r) failures.push_back("haar coefficient != 1/sqrt(2)");
  for (const auto& f : failures) detail += "; mismatch " + f;
  return {failures.empty(), detail};
}

// ---------------------------------------------------------------- 3

struct GradSuite {
  double worst = 0;
  std::size_t checks = 0;
  std::vector<std::string> failures;
  std::map<std::string, std::size_t> shapes_per_op;

  void run(const std::string& family, const DifferentiableOp<double>& op, const TensorD& x, double eps = kGradEps) {
    const double err = check_gradient(op, x, eps);
    worst = std::max(worst, err);
    ++checks;
    if (!(err <= kGradTol)) failures.push_back(op.name + " " + shape_string(x.shape()) + " err " + fmt("%.3g", err));
    shapes_per_op[family] += 0;
  }
  void shape_done(const std::string& family) { ++shapes_per_op[family]; }
};

// Bands stacked along a new leading axis, so a SubbandSet can be probed as one tensor.
TensorD stack_bands(const SubbandSet<double>& s) {
  std::vector<double> all;
  for (const auto& b : s.bands) all.insert(all.end(), b.data().begin(), b.data().end());
  Shape shape{s.size()};
  shape.insert(shape.end(), s.bands[0].shape().begin(), s.bands[0].shape().end());
  return TensorD(shape, std::move(all));
}

SubbandSet<double> unstack_bands(const TensorD& t, const SubbandSet<double>& like) {
  SubbandSet<double> out = like;
  const std::size_t each = like.bands[0].size();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.bands[i] = TensorD(like.bands[i].shape(),
                           std::vector<double>(t.data().begin() + static_cast<std::ptrdiff_t>(i * each),
                                               t.data().begin() + static_cast<std::ptrdiff_t>((i + 1) * each)));
  }
  return out;
}

ModelConfig tiny_model(ModelVariant variant) {
  ModelConfig cfg;
  cfg.variant = variant;
  cfg.embed.patch = 2;
  cfg.embed.tubelet = 1;
  cfg.embed.embed_dim = 8;
  cfg.embed.mask_ratio = 0.5;
  cfg.encoder_depth = 1;
  cfg.encoder_heads = 2;
  cfg.decoder_depth = 1;
  cfg.decoder_heads = 1;
  cfg.decoder_dim = 4;
  cfg.num_classes = 2;
  return cfg;
}

void model_checks(GradSuite& suite, ModelVariant variant, const Shape& sample, Rng& rng) {
  MaeModel<double> model(tiny_model(variant), sample, 7);
  for (auto& [name, t] : model.weights().parameters())
    for (auto& v : t->data()) v = rng.uniform(-0.6, 0.6);
  Shape bshape{2};
  bshape.insert(bshape.end(), sample.begin(), sample.end());
  const TensorD batch = random_tensor(bshape, rng, 0.0, 1.0);
  const std::vector<int> labels{1, 0};
  const std::vector<MaskPattern> masks = model.draw_masks(2, rng);
  for (bool pre : {true, false}) {
    const std::string family = std::string(pre ? "pretrain loss " : "finetune loss ") + std::string(to_string(variant));
    auto loss_of = [&](const TensorD& x, ModelWeights<double>* g, TensorD* dx) {
      return pre ? model.pretrain_loss(x, masks, g, dx) : model.finetune_loss(x, labels, g, dx);
    };
    suite.run(family, {family + " / input", [&](const TensorD& x) { return TensorD::scalar(loss_of(x, nullptr, nullptr)); },
                       [&](const TensorD& x, const TensorD& up) {
                         ModelWeights<double> g = zeros_like(model.weights());
                         TensorD dx;
                         loss_of(x, &g, &dx);
                         return scale(dx, up[0]);
                       }},
              batch);
    auto params = model.weights().parameters();
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
      TensorD& slot = *params[pi].second;
      const TensorD original = slot;
      suite.run(family,
                {family + " / " + params[pi].first,
                 [&](const TensorD& p) {
                   slot = p;
                   return TensorD::scalar(loss_of(batch, nullptr, nullptr));
                 },
                 [&, pi](const TensorD& p, const TensorD& up) {
                   slot = p;
                   ModelWeights<double> g = zeros_like(model.weights());
                   loss_of(batch, &g, nullptr);
                   return scale(*g.parameters()[pi].second, up[0]);
                 }},
                original);
      slot = original;
    }
    suite.shape_done(family);
  }
}

Outcome gradient_suite() {
  const auto start = Clock::now();
  GradSuite suite;
  Rng rng(3, "acceptance/gradients");
  const WaveletFilter haar = WaveletFilter::builtin("haar");
  const WaveletFilter db2 = WaveletFilter::builtin("db2");

  // Mode products along each axis of three shapes.
  for (const Shape& s : std::vector<Shape>{{4, 3}, {2, 3, 4}, {3, 2, 2, 3}}) {
    for (std::size_t axis = 0; axis < s.size(); ++axis) {
      const TensorD m = random_tensor({3, s[axis]}, rng);
      suite.run("mode_product", {"mode_product", [&, axis](const TensorD& x) { return mode_product(x, m, axis); },
                                 [&, axis](const TensorD&, const TensorD& g) { return mode_product_backward(g, m, axis); }},
                random_tensor(s, rng));
    }
    suite.shape_done("mode_product");
  }

  // DWT over one, two and three axes, three shapes each, both filters and boundaries.
  const std::vector<std::vector<Shape>> dwt_shapes{
      {{8}, {6}, {3, 4}}, {{4, 6}, {8, 4}, {2, 4, 6}}, {{4, 4, 4}, {2, 6, 4}, {6, 2, 8}}};
  for (std::size_t d = 1; d <= 3; ++d) {
    const std::string family = "dwt" + std::to_string(d) + "d";
    for (const Shape& s : dwt_shapes[d - 1]) {
      std::vector<std::size_t> axes;
      for (std::size_t a = s.size() - d; a < s.size(); ++a) axes.push_back(a);
      for (const WaveletFilter* f : {&haar, &db2}) {
        for (Boundary b : {Boundary::zero, Boundary::periodic}) {
          const SubbandSet<double> like = dwt(TensorD(s), axes, *f, b);
          suite.run(family,
                    {family + " " + f->name + " " + std::string(to_string(b)),
                     [&, b](const TensorD& x) { return stack_bands(dwt(x, axes, *f, b)); },
                     [&, b](const TensorD&, const TensorD& g) { return dwt_adjoint(unstack_bands(g, like), *f, b); }},
                    random_tensor(s, rng));
        }
      }
      suite.shape_done(family);
    }
  }

  // Sub-band reduction in every mode.
  for (const Shape& s : std::vector<Shape>{{1, 4, 4}, {2, 4, 6}, {1, 4, 4, 4}}) {
    std::vector<std::size_t> axes;
    for (std::size_t a = 1; a < s.size(); ++a) axes.push_back(a);
    const SubbandSet<double> like = dwt(TensorD(s), axes, haar, Boundary::zero);
    for (ReduceMode mode : {ReduceMode::avg, ReduceMode::omit, ReduceMode::concat}) {
      suite.run("subband_reduce",
                {"subband_reduce " + std::string(to_string(mode)),
                 [&, mode](const TensorD& x) { return subband_reduce(unstack_bands(x, like), mode); },
                 [&, mode](const TensorD& x, const TensorD& g) {
                   return stack_bands(subband_reduce_backward(g, unstack_bands(x, like), mode));
                 }},
                random_tensor(stack_bands(like).shape(), rng));
    }
    suite.shape_done("subband_reduce");
  }

  // Token embedding (DWT, reduction, patching, projection) w.r.t. the input.
  for (const Shape& s : std::vector<Shape>{{1, 8, 8}, {3, 8, 8}, {1, 4, 8, 8}}) {
    for (ReduceMode mode : {ReduceMode::avg, ReduceMode::omit, ReduceMode::concat}) {
      for (bool use_dwt : {true, false}) {
        if (!use_dwt && mode != ReduceMode::omit) continue;
        EmbedConfig cfg;
        cfg.use_dwt = use_dwt;
        cfg.mode = mode;
        cfg.patch = 2;
        cfg.tubelet = 1;
        cfg.embed_dim = 6;
        const EmbedPlan plan = plan_embedding(s, cfg);
        const EmbedWeights<double> w{random_tensor({plan.patch_dim, cfg.embed_dim}, rng),
                                     random_tensor({cfg.embed_dim}, rng)};
        const TensorD pos = sinusoidal_positions<double>(plan.grid, cfg.embed_dim);
        suite.run("embedding",
                  {"embed_tokens " + std::string(use_dwt ? to_string(mode) : "plain"),
                   [&](const TensorD& x) { return embed_tokens(x, plan, cfg, w, pos); },
                   [&](const TensorD& x, const TensorD& g) {
                     TensorD dw(w.weight.shape()), db(w.bias.shape());
                     const TensorD dp = linear_backward(patch_vectors(x, plan, cfg), w.weight, g, dw, db);
                     return patch_vectors_backward(dp, plan, cfg);
                   }},
                  random_tensor(s, rng));
      }
    }
    suite.shape_done("embedding");
  }

  // Attention logits and weighting for every variant w.r.t. Q, K and V.
  for (AttentionVariant var : {AttentionVariant::plain, AttentionVariant::dwt_lowpass,
                               AttentionVariant::idwt_ablation, AttentionVariant::idwt_lowpass}) {
    const std::string family = "attention " + std::string(to_string(var));
    for (const Shape& s : std::vector<Shape>{{4, 4}, {5, 2}, {3, 6}}) {
      AttentionConfig cfg;
      cfg.head_dim = s[1];
      cfg.variant = var;
      const TensorD q0 = random_tensor(s, rng, -1.5, 1.5), k0 = random_tensor(s, rng, -1.5, 1.5),
                    v0 = random_tensor(s, rng);
      for (int which = 0; which < 3; ++which) {
        auto inputs = [&, which](const TensorD& x) {
          return std::array<const TensorD*, 3>{which == 0 ? &x : &q0, which == 1 ? &x : &k0, which == 2 ? &x : &v0};
        };
        suite.run(family,
                  {family + (which == 0 ? " dQ" : which == 1 ? " dK" : " dV"),
                   [&, inputs](const TensorD& x) {
                     const auto in = inputs(x);
                     return attention_scores(*in[0], *in[1], *in[2], cfg);
                   },
                   [&, inputs, which](const TensorD& x, const TensorD& g) {
                     const auto in = inputs(x);
                     AttentionCache<double> cache;
                     attention_scores(*in[0], *in[1], *in[2], cfg, &cache);
                     const auto grads = attention_scores_backward(*in[0], *in[1], *in[2], cache, g, cfg);
                     return which == 0 ? grads.dq : which == 1 ? grads.dk : grads.dv;
                   }},
                  which == 0 ? q0 : which == 1 ? k0 : v0);
      }
      suite.shape_done(family);
    }
  }

  // Full pretrain and finetune losses w.r.t. the input and every parameter.
  for (ModelVariant v : {ModelVariant::baseline, ModelVariant::rf_a, ModelVariant::rf_aa, ModelVariant::rf_o,
                         ModelVariant::rf_oa, ModelVariant::rf_c, ModelVariant::rf_ca, ModelVariant::rf_i,
                         ModelVariant::rf_ia}) {
    for (const Shape& s : std::vector<Shape>{{1, 8, 8}, {2, 8, 4}, {1, 4, 8, 8}}) model_checks(suite, v, s, rng);
  }

  const double secs = seconds_since(start);
  std::size_t min_shapes = 1000;
  for (const auto& [name, n] : suite.shapes_per_op) min_shapes = std::min(min_shapes, n);
  std::string detail = std::to_string(suite.checks) + " checks over " + std::to_string(suite.shapes_per_op.size()) +
                       " operations, >= " + std::to_string(min_shapes) + " shapes each, worst rel err " +
                       fmt("%.3g", suite.worst) + " (<= 1e-5), " + fmt("%.1f", secs) + " s (< 120 s)";
  for (std::size_t i = 0; i < std::min<std::size_t>(3, suite.failures.size()); ++i) detail += "; " + suite.failures[i];
  return {suite.failures.empty() && min_shapes >= 3 && secs < kGradSeconds, detail};
}

// ---------------------------------------------------------------- 4

Outcome attention_algebra() {
  Rng rng(4, "acceptance/attention");
  double worst_row = 0, worst_dup = 0, worst_retained = 0;
  bool macs_ok = true;
  std::string mac_note;
  for (std::size_t n : {1u, 3u, 7u, 16u}) {
    for (std::size_t dk : {2u, 4u, 8u, 16u}) {
      const TensorD q = random_tensor({n, dk}, rng, -2, 2), k = random_tensor({n, dk}, rng, -2, 2),
                    v = random_tensor({n, dk}, rng);
      for (AttentionVariant var : {AttentionVariant::plain, AttentionVariant::dwt_lowpass,
                                   AttentionVariant::idwt_ablation, AttentionVariant::idwt_lowpass}) {
        AttentionConfig cfg;
        cfg.head_dim = dk;
        cfg.variant = var;
        AttentionCache<double> cache;
        attention_scores(q, k, v, cfg, &cache);
        for (std::size_t i = 0; i < n; ++i) {
          double sum = 0;
          for (std::size_t j = 0; j < n; ++j) {
            const double w = cache.weights.at(i, j);
            if (w < 0) worst_row = std::max(worst_row, -w);
            sum += w;
          }
          worst_row = std::max(worst_row, std::abs(sum - 1.0));
        }
      }

      // Pairwise-duplicated features: the Haar lowpass of [a a b b ...] is
      // sqrt(2) [a b ...], so both variants form the same logits.
      const std::size_t half = dk / 2;
      const TensorD qh = random_tensor({n, half}, rng, -2, 2), kh = random_tensor({n, half}, rng, -2, 2);
      TensorD qd({n, dk}), kd({n, dk});
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < dk; ++c) {
          qd.at(i, c) = qh.at(i, c / 2);
          kd.at(i, c) = kh.at(i, c / 2);
        }
      }
      AttentionConfig low;
      low.head_dim = dk;
      low.variant = AttentionVariant::dwt_lowpass;
      AttentionConfig plain = low;
      plain.variant = AttentionVariant::plain;
      worst_dup = std::max(worst_dup, max_abs_diff(attention_scores(qd, kd, v, low), attention_scores(qd, kd, v, plain)));

      AttentionConfig retained = plain;
      retained.variant = AttentionVariant::idwt_ablation;
      retained.retain_high_bands = true;
      worst_retained = std::max(worst_retained, max_abs_diff(attention_scores(q, k, v, retained),
                                                             attention_scores(q, k, v, plain)));

      reset_logit_mac_count();
      attention_scores(q, k, v, plain);
      const std::uint64_t plain_macs = logit_mac_count();
      reset_logit_mac_count();
      attention_scores(q, k, v, low);
      const std::uint64_t low_macs = logit_mac_count();
      if (plain_macs != n * n * dk || low_macs != n * n * dk / 2) {
        macs_ok = false;
        mac_note = " (n=" + std::to_string(n) + " d_k=" + std::to_string(dk) + ": " + std::to_string(plain_macs) +
                   " / " + std::to_string(low_macs) + ")";
      }
    }
  }
  const bool pass = worst_row <= kStochasticTol && worst_dup <= kDuplicateTol && worst_retained <= kRetainedTol && macs_ok;
  return {pass, "row-stochastic " + fmt("%.3g", worst_row) + " (<= 1e-6), duplicated-feature " + fmt("%.3g", worst_dup) +
                    " (<= 1e-5), retained-band idwt " + fmt("%.3g", worst_retained) +
                    " (<= 1e-10), logit MACs n^2 d_k vs n^2 d_k/2 " + (macs_ok ? "exact" : "MISMATCH" + mac_note)};
}

// ---------------------------------------------------------------- 5

Outcome masking() {
  Rng rng(5, "acceptance/masking");
  std::size_t count_failures = 0, tube_failures = 0, draws = 0;
  const std::vector<TokenGrid> grids{{1, 7, 7}, {1, 14, 14}, {4, 4, 4}, {8, 7, 7}, {2, 3, 5}};
  const std::vector<double> ratios{0.75, 0.9, 0.5, 0.29, 0.6};
  for (std::size_t i = 0; i < kMaskDraws; ++i) {
    const TokenGrid& g = grids[i % grids.size()];
    const double ratio = ratios[(i / grids.size()) % ratios.size()];
    const MaskPattern m = tube_mask(g, ratio, rng);
    ++draws;
    const std::size_t want = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(g.spatial()) + 1e-9));
    std::size_t spatial = 0;
    for (auto c : m.spatial_mask) spatial += c;
    if (spatial != want || m.masked.size() != want * g.temporal ||
        m.visible.size() + m.masked.size() != g.count())
      ++count_failures;
    for (std::size_t tok : m.masked) {
      for (std::size_t t = 0; t < g.temporal; ++t) {
        const std::size_t same_cell = t * g.spatial() + tok % g.spatial();
        if (!std::binary_search(m.masked.begin(), m.masked.end(), same_cell)) {
          ++tube_failures;
          t = g.temporal;
        }
      }
    }
  }
  return {count_failures == 0 && tube_failures == 0,
          std::to_string(draws) + " draws: " + std::to_string(count_failures) + " count mismatches, " +
              std::to_string(tube_failures) + " tube violations"};
}

// ---------------------------------------------------------------- 6

struct Oracle {
  std::size_t clean_hits = 0, clean_total = 0;
  std::map<std::pair<std::string, int>, std::pair<std::size_t, std::size_t>> cells;
  std::map<std::string, std::map<std::string, std::vector<std::pair<int, int>>>> sequences;

  explicit Oracle(const PredictionLog& log) {
    for (const auto& r : log.records()) {
      const bool hit = r.predicted == r.truth;
      if (r.kind == ConditionKind::clean) {
        clean_hits += hit;
        ++clean_total;
      } else if (r.kind == ConditionKind::corruption) {
        auto& c = cells[{r.detail, r.level}];
        c.first += hit;
        ++c.second;
      } else {
        sequences[r.detail][r.sample_id].emplace_back(r.level, r.predicted);
      }
    }
  }
  double clean() const { return 100.0 * static_cast<double>(clean_hits) / static_cast<double>(clean_total); }
  double acc(const std::string& c, int s) const {
    const auto& cell = cells.at({c, s});
    return 100.0 * static_cast<double>(cell.first) / static_cast<double>(cell.second);
  }
  double ce(const std::string& c, const BaselineErrorTable& b) const {
    double num = 0, den = 0;
    for (int s = 1; s <= 5; ++s) {
      num += 100.0 - acc(c, s);
      den += b.error(c, s);
    }
    return num / den;
  }
  double fp(const std::string& k) const {
    std::size_t flips = 0, total = 0;
    for (auto [id, entries] : sequences.at(k)) {
      std::sort(entries.begin(), entries.end());
      for (std::size_t j = 1; j < entries.size(); ++j) {
        flips += entries[j].second != entries[0].second;
        ++total;
      }
    }
    return static_cast<double>(flips) / static_cast<double>(total);
  }
  std::pair<double, double> gamma(const std::string& c) const {
    double ga = 0, gr = 0;
    for (int s = 1; s <= 5; ++s) {
      const double drop = clean() - acc(c, s);
      ga += 1.0 - drop / 100.0;
      gr += 1.0 - drop / clean();
    }
    return {ga / 5.0, gr / 5.0};
  }
};

std::string sample_id(std::size_t i) {
  char id[24];
  std::snprintf(id, sizeof id, "%06zu", i);
  return id;
}

Outcome metrics_oracle() {
  std::vector<std::string> failures;
  auto same = [&](double got, double want, const std::string& what) {
    if (got != want) failures.push_back(what + " " + fmt("%.17g", got) + " vs " + fmt("%.17g", want));
  };

  // Fixture: ten samples, 80 % clean; gaussian errors 10 s % against a
  // baseline of 20 s %; severity 3 keeps 70 %; one sequence flips once in two steps.
  PredictionLog fixture;
  BaselineErrorTable base;
  for (std::size_t i = 0; i < 10; ++i) {
    fixture.add({sample_id(i), ConditionKind::clean, "-", 0, i < 8 ? 1 : 0, 1});
    for (int s = 1; s <= 5; ++s)
      fixture.add({sample_id(i), ConditionKind::corruption, "gaussian", s, i < 10 - static_cast<std::size_t>(s) ? 1 : 0, 1});
  }
  for (int s = 1; s <= 5; ++s) base.set("gaussian", s, 20.0 * s);
  fixture.add({sample_id(0), ConditionKind::sequence, "brightness", 1, 2, 1});
  fixture.add({sample_id(0), ConditionKind::sequence, "brightness", 2, 2, 1});
  fixture.add({sample_id(0), ConditionKind::sequence, "brightness", 3, 0, 1});
  same(corruption_error(fixture, base, "gaussian"), 0.5, "fixture CE");
  same(flip_probability(fixture, "brightness"), 0.5, "fixture FP");
  const RobustnessScores g3 = robustness_scores(clean_accuracy(fixture), corrupted_accuracy(fixture, "gaussian", 3));
  same(g3.absolute, 0.9, "fixture gamma_a");
  same(g3.relative, 0.875, "fixture gamma_r");

  // Random logs against the brute-force oracle.
  Rng rng(6, "acceptance/metrics");
  const std::vector<std::string> corruptions{"gaussian", "impulse", "blur"};
  const std::vector<std::string> kinds{"brightness", "translate"};
  for (int trial = 0; trial < 5; ++trial) {
    PredictionLog log;
    BaselineErrorTable b;
    const std::size_t n = 20 + rng.below(30);
    for (std::size_t i = 0; i < n; ++i) {
      const int truth = static_cast<int>(rng.below(4));
      auto guess = [&](double p_right) { return rng.uniform() < p_right ? truth : static_cast<int>(rng.below(4)); };
      log.add({sample_id(i), ConditionKind::clean, "-", 0, guess(0.8), truth});
      for (const auto& c : corruptions)
        for (int s = 1; s <= 5; ++s) log.add({sample_id(i), ConditionKind::corruption, c, s, guess(0.8 - 0.1 * s), truth});
      if (i % 3 == 0) {
        for (const auto& k : kinds) {
          const std::size_t len = 2 + rng.below(6);
          for (std::size_t j = 1; j <= len; ++j)
            log.add({sample_id(i), ConditionKind::sequence, k, static_cast<int>(j), guess(0.7), truth});
        }
      }
    }
    for (const auto& c : corruptions)
      for (int s = 1; s <= 5; ++s) b.set(c, s, rng.uniform(5.0, 100.0));
    const Oracle o(log);
    same(clean_accuracy(log), o.clean(), "clean accuracy");
    double mce = 0;
    for (const auto& c : corruptions) {
      for (int s = 1; s <= 5; ++s) same(corrupted_accuracy(log, c, s), o.acc(c, s), "accuracy " + c);
      same(corruption_error(log, b, c), o.ce(c, b), "CE " + c);
      mce += o.ce(c, b);
      const auto [ga, gr] = o.gamma(c);
      const RobustnessScores r = corruption_robustness(log, c);
      same(r.absolute, ga, "gamma_a " + c);
      same(r.relative, gr, "gamma_r " + c);
    }
    same(mean_corruption_error(log, b, corruptions).mce, mce / 3.0, "mCE");
    double mfp = 0;
    for (const auto& k : kinds) {
      same(flip_probability(log, k), o.fp(k), "FP " + k);
      mfp += o.fp(k);
    }
    same(mean_flip_probability(log, kinds).mfp, mfp / 2.0, "mFP");
  }
  std::string detail = "fixture CE=0.5 FP=1/2 gamma_a=0.9 gamma_r=0.875 and 5 random logs, exact equality";
  for (std::size_t i = 0; i < std::min<std::size_t>(3, failures.size()); ++i) detail += "; " + failures[i];
  return {failures.empty(), detail};
}

// ---------------------------------------------------------------- 7-9

void run_or_throw(const std::string& cmd, const RunConfig& cfg) {
  std::ostringstream log, err;
  if (run_command(cmd, cfg, log, err) != 0) throw Error(err.str());
  std::cout << log.str() << std::flush;
}

RunConfig digits_config(const fs::path& data, const std::string& variant, const fs::path& out) {
  RunConfig cfg;
  cfg.set("data.train_images", (data / "train-images.idx").string());
  cfg.set("data.train_labels", (data / "train-labels.idx").string());
  cfg.set("data.test_images", (data / "test-images.idx").string());
  cfg.set("data.test_labels", (data / "test-labels.idx").string());
  cfg.set("model.variant", variant);
  cfg.set("seed", "1");
  cfg.set("pretrain.epochs", "10");
  cfg.set("pretrain.lr", "1e-3");
  cfg.set("finetune.epochs", "5");
  cfg.set("finetune.batch_size", "32");
  cfg.set("finetune.lr", "3e-3");
  cfg.set("output.dir", out.string());
  return cfg;
}

// Pretrain, finetune and evaluate one model; returns the prediction log.
PredictionLog train_and_evaluate(RunConfig cfg, const fs::path& out, const std::string& corruption,
                                 const std::string& severities) {
  cfg.set("output.dir", (out / "pretrain").string());
  run_or_throw("pretrain", cfg);
  cfg.set("finetune.init", (out / "pretrain" / "checkpoint.rfck").string());
  cfg.set("output.dir", (out / "finetune").string());
  run_or_throw("finetune", cfg);
  cfg.set("evaluate.checkpoint", (out / "finetune" / "checkpoint.rfck").string());
  cfg.set("evaluate.corruptions", corruption);
  cfg.set("evaluate.severities", severities);
  cfg.set("output.dir", (out / "evaluate").string());
  run_or_throw("evaluate", cfg);
  return PredictionLog::load((out / "evaluate" / "predictions.tsv").string());
}

Outcome digits_trend(const fs::path& work) {
  const auto start = Clock::now();
  RunConfig synth;
  synth.set("synth.kind", "digits");
  synth.set("synth.train_count", "10000");
  synth.set("synth.test_count", "2000");
  synth.set("output.dir", (work / "data").string());
  run_or_throw("synth", synth);

  std::map<std::string, PredictionLog> logs;
  for (const std::string v : {"baseline", "RF-O"})
    logs[v] = train_and_evaluate(digits_config(work / "data", v, work / v), work / v, "impulse", "1,2,3,4,5");
  const double secs = seconds_since(start);

  const double clean_b = clean_accuracy(logs["baseline"]), clean_o = clean_accuracy(logs["RF-O"]);
  int wins = 0;
  std::string per;
  for (int s = 1; s <= 5; ++s) {
    const double gb = robustness_scores(clean_b, corrupted_accuracy(logs["baseline"], "impulse", s)).relative;
    const double go = robustness_scores(clean_o, corrupted_accuracy(logs["RF-O"], "impulse", s)).relative;
    wins += go >= gb;
    per += " s" + std::to_string(s) + " " + fmt("%.3f", go) + "/" + fmt("%.3f", gb);
  }
  const bool pass = clean_b >= kDigitsCleanMin && clean_o >= kDigitsCleanMin && wins >= kDigitsSeverityWins &&
                    secs <= kDigitsSeconds;
  return {pass, "clean baseline " + fmt("%.2f", clean_b) + "%, RF-O " + fmt("%.2f", clean_o) +
                    "% (>= 90); impulse gamma_r RF-O/baseline" + per + "; RF-O >= baseline in " +
                    std::to_string(wins) + "/5 (>= 3); " + fmt("%.0f", secs) + " s (<= 1800 s)"};
}

RunConfig video_config(const fs::path& data, const std::string& variant, std::uint64_t seed) {
  RunConfig cfg;
  cfg.set("data.kind", "tensor-video-dir");
  cfg.set("data.train_dir", (data / "train").string());
  cfg.set("data.test_dir", (data / "test").string());
  cfg.set("model.variant", variant);
  cfg.set("model.num_classes", "5");
  cfg.set("model.patch", "2");
  cfg.set("model.tubelet", "2");
  cfg.set("model.mask_ratio", "0.9");
  cfg.set("seed", std::to_string(seed));
  cfg.set("pretrain.epochs", "4");
  cfg.set("pretrain.lr", "1e-3");
  cfg.set("finetune.epochs", "6");
  cfg.set("finetune.batch_size", "32");
  cfg.set("finetune.lr", "3e-3");
  return cfg;
}

Outcome video_path(const fs::path& work) {
  const auto start = Clock::now();
  RunConfig synth;
  synth.set("synth.kind", "shapes");
  synth.set("synth.train_count", "3000");
  synth.set("synth.test_count", "500");
  synth.set("synth.frames", "8");
  synth.set("synth.size", "16");
  synth.set("synth.classes", "5");
  synth.set("output.dir", (work / "data").string());
  run_or_throw("synth", synth);

  int wins = 0;
  double worst_clean = 100;
  std::string per;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    std::map<std::string, double> drop;
    for (const std::string v : {"baseline", "RF-OA"}) {
      const fs::path out = work / ("seed" + std::to_string(seed)) / v;
      const PredictionLog log = train_and_evaluate(video_config(work / "data", v, seed), out, "jumble", "5");
      const double clean = clean_accuracy(log);
      if (v == "RF-OA") worst_clean = std::min(worst_clean, clean);
      drop[v] = clean - corrupted_accuracy(log, "jumble", 5);
      per += " seed" + std::to_string(seed) + " " + v + " clean " + fmt("%.1f", clean) + " drop " + fmt("%.1f", drop[v]) + ";";
    }
    wins += drop["baseline"] >= drop["RF-OA"];
  }
  const double secs = seconds_since(start);
  const bool pass = worst_clean >= kVideoCleanMin && wins >= kVideoSeedWins && secs <= kVideoSeconds;
  return {pass, "RF-OA min clean " + fmt("%.1f", worst_clean) + "% (>= 95);" + per + " baseline drop >= RF-OA drop in " +
                    std::to_string(wins) + "/3 seeds (>= 2); " + fmt("%.0f", secs) + " s (<= 1200 s)"};
}

Outcome determinism(const fs::path& work) {
  RunConfig synth;
  synth.set("synth.kind", "digits");
  synth.set("synth.train_count", "600");
  synth.set("synth.test_count", "100");
  synth.set("output.dir", (work / "data").string());
  run_or_throw("synth", synth);
  spit(work / "baseline_errors.tsv",
       "gaussian\t1\t20\ngaussian\t2\t30\ngaussian\t3\t40\ngaussian\t4\t50\ngaussian\t5\t60\n");

  const fs::path data = work / "data";
  const std::string config_text =
      "data.train_images = " + (data / "train-images.idx").string() + "\n" +
      "data.train_labels = " + (data / "train-labels.idx").string() + "\n" +
      "data.test_images = " + (data / "test-images.idx").string() + "\n" +
      "data.test_labels = " + (data / "test-labels.idx").string() + "\n" +
      "model.variant = RF-OA\nseed = 11\npretrain.epochs = 2\nfinetune.epochs = 2\n"
      "evaluate.corruptions = gaussian\nevaluate.sequences = brightness\nevaluate.sequence_length = 5\n"
      "evaluate.sequence_samples = 20\nmetrics.baseline = " +
      (work / "baseline_errors.tsv").string() + "\n";
  spit(work / "run.cfg", config_text);

  const std::vector<std::pair<std::string, std::string>> outputs{
      {"pretrain", "loss_log.tsv"},    {"finetune", "loss_log.tsv"},    {"finetune", "accuracy_log.tsv"},
      {"evaluate", "predictions.tsv"}, {"evaluate", "summary.tsv"},     {"metrics", "ce.tsv"},
      {"metrics", "fp.tsv"},           {"metrics", "robustness.tsv"},   {"metrics", "categories.tsv"}};
  for (const std::string run : {"a", "b"}) {
    RunConfig cfg = RunConfig::load(work / "run.cfg");
    const fs::path out = work / run;
    cfg.set("output.dir", (out / "pretrain").string());
    run_or_throw("pretrain", cfg);
    cfg.set("finetune.init", (out / "pretrain" / "checkpoint.rfck").string());
    cfg.set("output.dir", (out / "finetune").string());
    run_or_throw("finetune", cfg);
    cfg.set("evaluate.checkpoint", (out / "finetune" / "checkpoint.rfck").string());
    cfg.set("output.dir", (out / "evaluate").string());
    run_or_throw("evaluate", cfg);
    cfg.set("metrics.predictions", (out / "evaluate" / "predictions.tsv").string());
    cfg.set("output.dir", (out / "metrics").string());
    run_or_throw("metrics", cfg);
  }
  std::vector<std::string> differing;
  for (const auto& [dir, file] : outputs) {
    const std::string a = slurp(work / "a" / dir / file), b = slurp(work / "b" / dir / file);
    if (a.empty() || a != b) differing.push_back(dir + "/" + file);
  }
  std::string detail = std::to_string(outputs.size()) + " files (loss logs, prediction log, metric tables) compared byte for byte";
  for (const auto& d : differing) detail += "; differs or empty: " + d;
  return {differing.empty(), detail};
}

Outcome run_criterion(int n, const fs::path& work) {
  const fs::path dir = work / ("criterion_" + std::to_string(n));
  fs::remove_all(dir);
  fs::create_directories(dir);
  switch (n) {
    case 1: return wavelet_correctness();
    case 2: return analysis_matrices();
    case 3: return gradient_suite();
    case 4: return attention_algebra();
    case 5: return masking();
    case 6: return metrics_oracle();
    case 7: return digits_trend(dir);
    case 8: return video_path(dir);
    case 9: return determinism(dir);
    default: throw ConfigError("no criterion " + std::to_string(n));
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks; prints one PASS/FAIL line per criterion"};
  std::vector<int> criteria;
  std::string work = (fs::temp_directory_path() / "rf_acceptance").string();
  app.add_option("--criterion", criteria, "criterion numbers to run (default: all)")->check(CLI::Range(1, 9));
  app.add_option("--work-dir", work, "scratch directory for training runs");
  CLI11_PARSE(app, argc, argv);
  if (criteria.empty()) criteria = {1, 2, 3, 4, 5, 6, 7, 8, 9};

  int failed = 0;
  for (int n : criteria) {
    Outcome o;
    try {
      o = run_criterion(n, work);
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    std::cout << "criterion " << n << ": " << (o.pass ? "PASS" : "FAIL") << " : " << o.detail << std::endl;
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
