#include "robustformer/corruptions.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "robustformer/rng.hpp"

namespace rf {

namespace {

struct KindInfo {
  CorruptionKind kind;
  const char* name;
  const char* category;
  std::array<double, 5> table;
};

constexpr std::array<KindInfo, kNumCorruptionKinds> kKinds{{
    {CorruptionKind::gaussian, "gaussian", "noise", {.04, .08, .12, .18, .26}},
    {CorruptionKind::shot, "shot", "noise", {60, 25, 12, 5, 3}},
    {CorruptionKind::impulse, "impulse", "noise", {.02, .04, .07, .11, .17}},
    {CorruptionKind::speckle, "speckle", "noise", {.15, .2, .35, .45, .6}},
    {CorruptionKind::defocus_blur, "defocus-blur", "blur", {1, 1.5, 2, 2.5, 3}},
    {CorruptionKind::motion_blur, "motion-blur", "blur", {3, 5, 7, 9, 11}},
    {CorruptionKind::contrast, "contrast", "digital", {.6, .7, .8, .9, .95}},
    {CorruptionKind::brightness, "brightness", "digital", {.1, .2, .3, .4, .5}},
    {CorruptionKind::pixelate, "pixelate", "digital", {2, 3, 4, 5, 6}},
    {CorruptionKind::quantize, "quantize", "digital", {32, 16, 8, 6, 4}},
    {CorruptionKind::packet_loss, "packet-loss", "digital", {.05, .1, .2, .3, .4}},
    {CorruptionKind::rain, "rain", "weather", {.01, .02, .04, .06, .1}},
    {CorruptionKind::jumble, "jumble", "temporal", {2, 3, 4, 6, 8}},
    {CorruptionKind::box_jumble, "box-jumble", "temporal", {8, 6, 4, 3, 2}},
    {CorruptionKind::static_rotate, "static-rotate", "camera", {5, 10, 15, 20, 30}},
    {CorruptionKind::translate, "translate", "camera", {2, 4, 6, 8, 12}},
}};

const KindInfo& info(CorruptionKind kind) { return kKinds[static_cast<std::size_t>(kind)]; }

// View of an image or video as C x T planes of H x W.
struct Planes {
  std::size_t channels, frames, height, width;

  std::size_t plane_size() const { return height * width; }
  std::size_t offset(std::size_t c, std::size_t t) const { return (c * frames + t) * plane_size(); }
};

Planes planes_of(const Tensor<float>& x) {
  if (x.rank() == 3) return {x.dim(0), 1, x.dim(1), x.dim(2)};
  if (x.rank() == 4) return {x.dim(0), x.dim(1), x.dim(2), x.dim(3)};
  throw ShapeError("corruption input must be (C,H,W) or (C,T,H,W), got " + shape_string(x.shape()));
}

float clip01(double v) { return static_cast<float>(std::clamp(v, 0.0, 1.0)); }

template <typename F>
Tensor<float> map_values(const Tensor<float>& x, F f) {
  Tensor<float> out = x;
  for (auto& v : out.data()) v = clip01(f(static_cast<double>(v)));
  return out;
}

// Weighted sum of shifted copies per plane with edge replication.
struct Tap {
  int dy, dx;
};

Tensor<float> convolve_taps(const Tensor<float>& x, const std::vector<Tap>& taps) {
  const Planes p = planes_of(x);
  Tensor<float> out(x.shape());
  const double w = 1.0 / static_cast<double>(taps.size());
  const int h = static_cast<int>(p.height), wd = static_cast<int>(p.width);
  for (std::size_t c = 0; c < p.channels; ++c) {
    for (std::size_t t = 0; t < p.frames; ++t) {
      const std::size_t base = p.offset(c, t);
      for (int y = 0; y < h; ++y) {
        for (int xx = 0; xx < wd; ++xx) {
          double acc = 0;
          for (const Tap& tap : taps) {
            const int sy = std::clamp(y + tap.dy, 0, h - 1);
            const int sx = std::clamp(xx + tap.dx, 0, wd - 1);
            acc += x[base + static_cast<std::size_t>(sy * wd + sx)];
          }
          out[base + static_cast<std::size_t>(y * wd + xx)] = clip01(acc * w);
        }
      }
    }
  }
  return out;
}

Tensor<float> defocus(const Tensor<float>& x, double radius) {
  std::vector<Tap> taps;
  const int r = static_cast<int>(std::ceil(radius));
  for (int dy = -r; dy <= r; ++dy)
    for (int dx = -r; dx <= r; ++dx)
      if (dx * dx + dy * dy <= radius * radius + 1e-9) taps.push_back({dy, dx});
  return convolve_taps(x, taps);
}

Tensor<float> motion(const Tensor<float>& x, double length, Rng& rng) {
  const double angle = rng.uniform(0.0, std::numbers::pi);
  const int n = std::max(1, static_cast<int>(std::lround(length)));
  std::vector<Tap> taps;
  for (int k = 0; k < n; ++k) {
    const double s = k - (n - 1) / 2.0;
    taps.push_back({static_cast<int>(std::lround(s * std::sin(angle))), static_cast<int>(std::lround(s * std::cos(angle)))});
  }
  return convolve_taps(x, taps);
}

Tensor<float> contrast(const Tensor<float>& x, double reduction) {
  const Planes p = planes_of(x);
  Tensor<float> out = x;
  const double factor = 1.0 - reduction;
  for (std::size_t c = 0; c < p.channels; ++c) {
    for (std::size_t t = 0; t < p.frames; ++t) {
      const std::size_t base = p.offset(c, t);
      double mean = 0;
      for (std::size_t i = 0; i < p.plane_size(); ++i) mean += x[base + i];
      mean /= static_cast<double>(p.plane_size());
      for (std::size_t i = 0; i < p.plane_size(); ++i) out[base + i] = clip01((x[base + i] - mean) * factor + mean);
    }
  }
  return out;
}

Tensor<float> pixelate(const Tensor<float>& x, double factor) {
  const std::size_t k = static_cast<std::size_t>(std::lround(factor));
  if (k <= 1) return x;
  const Planes p = planes_of(x);
  Tensor<float> out(x.shape());
  for (std::size_t c = 0; c < p.channels; ++c) {
    for (std::size_t t = 0; t < p.frames; ++t) {
      const std::size_t base = p.offset(c, t);
      for (std::size_t by = 0; by < p.height; by += k) {
        for (std::size_t bx = 0; bx < p.width; bx += k) {
          const std::size_t ey = std::min(by + k, p.height), ex = std::min(bx + k, p.width);
          double mean = 0;
          for (std::size_t y = by; y < ey; ++y)
            for (std::size_t xx = bx; xx < ex; ++xx) mean += x[base + y * p.width + xx];
          mean /= static_cast<double>((ey - by) * (ex - bx));
          for (std::size_t y = by; y < ey; ++y)
            for (std::size_t xx = bx; xx < ex; ++xx) out[base + y * p.width + xx] = clip01(mean);
        }
      }
    }
  }
  return out;
}

Tensor<float> packet_loss(const Tensor<float>& x, double fraction, Rng& rng) {
  const Planes p = planes_of(x);
  const std::size_t block = std::min<std::size_t>(16, std::max<std::size_t>(2, std::min(p.height, p.width) / 4));
  const std::size_t by = (p.height + block - 1) / block, bx = (p.width + block - 1) / block;
  const std::size_t total = by * bx;
  const auto drop = static_cast<std::size_t>(std::lround(std::clamp(fraction, 0.0, 1.0) * static_cast<double>(total)));
  Tensor<float> out = x;
  std::vector<std::size_t> cells(total);
  for (std::size_t t = 0; t < p.frames; ++t) {
    for (std::size_t i = 0; i < total; ++i) cells[i] = i;
    rng.shuffle(cells.begin(), cells.end());
    for (std::size_t d = 0; d < drop; ++d) {
      const std::size_t cy = cells[d] / bx, cx = cells[d] % bx;
      for (std::size_t c = 0; c < p.channels; ++c) {
        const std::size_t base = p.offset(c, t);
        for (std::size_t y = cy * block; y < std::min((cy + 1) * block, p.height); ++y)
          for (std::size_t xx = cx * block; xx < std::min((cx + 1) * block, p.width); ++xx) out[base + y * p.width + xx] = 0.0f;
      }
    }
  }
  return out;
}

Tensor<float> rain(const Tensor<float>& x, double density, Rng& rng) {
  const Planes p = planes_of(x);
  const auto streaks = static_cast<std::size_t>(std::lround(density * static_cast<double>(p.plane_size())));
  const std::size_t length = std::max<std::size_t>(2, p.height / 8);
  Tensor<float> out = x;
  for (std::size_t t = 0; t < p.frames; ++t) {
    for (std::size_t s = 0; s < streaks; ++s) {
      const auto y0 = static_cast<long>(rng.below(p.height));
      const auto x0 = static_cast<long>(rng.below(p.width));
      for (std::size_t k = 0; k < length; ++k) {
        const long y = y0 + static_cast<long>(k), xx = x0 - static_cast<long>(k);
        if (y >= static_cast<long>(p.height) || xx < 0) break;
        for (std::size_t c = 0; c < p.channels; ++c) {
          float& v = out[p.offset(c, t) + static_cast<std::size_t>(y) * p.width + static_cast<std::size_t>(xx)];
          v = std::max(v, 0.85f);
        }
      }
    }
  }
  return out;
}

// Copies frame src of x into frame dst of out, for every channel.
void copy_frame(const Tensor<float>& x, Tensor<float>& out, const Planes& p, std::size_t src, std::size_t dst) {
  for (std::size_t c = 0; c < p.channels; ++c) {
    std::copy_n(x.data().begin() + static_cast<std::ptrdiff_t>(p.offset(c, src)), p.plane_size(),
                out.data().begin() + static_cast<std::ptrdiff_t>(p.offset(c, dst)));
  }
}

Tensor<float> permute_frames(const Tensor<float>& x, const std::vector<std::size_t>& order) {
  const Planes p = planes_of(x);
  Tensor<float> out(x.shape());
  for (std::size_t t = 0; t < p.frames; ++t) copy_frame(x, out, p, order[t], t);
  return out;
}

Tensor<float> jumble(const Tensor<float>& x, double window, Rng& rng) {
  const Planes p = planes_of(x);
  const std::size_t w = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(window)));
  std::vector<std::size_t> order(p.frames);
  for (std::size_t t = 0; t < p.frames; ++t) order[t] = t;
  for (std::size_t start = 0; start < p.frames; start += w) {
    rng.shuffle(order.begin() + static_cast<std::ptrdiff_t>(start),
                order.begin() + static_cast<std::ptrdiff_t>(std::min(start + w, p.frames)));
  }
  return permute_frames(x, order);
}

Tensor<float> box_jumble(const Tensor<float>& x, double block, Rng& rng) {
  const Planes p = planes_of(x);
  const std::size_t b = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(block)));
  std::vector<std::size_t> starts;
  for (std::size_t s = 0; s < p.frames; s += b) starts.push_back(s);
  rng.shuffle(starts.begin(), starts.end());
  std::vector<std::size_t> order;
  for (std::size_t s : starts)
    for (std::size_t t = s; t < std::min(s + b, p.frames); ++t) order.push_back(t);
  return permute_frames(x, order);
}

// Nearest-neighbour resampling of every plane of frame t through `map`,
// which sends an output pixel to a source coordinate; edges are replicated.
template <typename Map>
void resample_frame(const Tensor<float>& x, Tensor<float>& out, const Planes& p, std::size_t t, Map map) {
  const long h = static_cast<long>(p.height), w = static_cast<long>(p.width);
  for (long y = 0; y < h; ++y) {
    for (long xx = 0; xx < w; ++xx) {
      const auto [sy, sx] = map(static_cast<double>(y), static_cast<double>(xx));
      const long iy = std::clamp(static_cast<long>(std::lround(sy)), 0L, h - 1);
      const long ix = std::clamp(static_cast<long>(std::lround(sx)), 0L, w - 1);
      for (std::size_t c = 0; c < p.channels; ++c) {
        const std::size_t base = p.offset(c, t);
        out[base + static_cast<std::size_t>(y * w + xx)] = x[base + static_cast<std::size_t>(iy * w + ix)];
      }
    }
  }
}

Tensor<float> rotate(const Tensor<float>& x, double degrees) {
  const Planes p = planes_of(x);
  Tensor<float> out(x.shape());
  const double a = degrees * std::numbers::pi / 180.0;
  const double cy = (static_cast<double>(p.height) - 1) / 2, cx = (static_cast<double>(p.width) - 1) / 2;
  const double ca = std::cos(a), sa = std::sin(a);
  for (std::size_t t = 0; t < p.frames; ++t) {
    resample_frame(x, out, p, t, [&](double y, double xx) {
      const double dy = y - cy, dx = xx - cx;
      return std::pair{cy + ca * dy - sa * dx, cx + sa * dy + ca * dx};
    });
  }
  return out;
}

Tensor<float> translate(const Tensor<float>& x, double pixels, Rng& rng) {
  const Planes p = planes_of(x);
  Tensor<float> out(x.shape());
  const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double uy = std::sin(angle), ux = std::cos(angle);
  for (std::size_t t = 0; t < p.frames; ++t) {
    const double shift = p.frames > 1 ? pixels * static_cast<double>(t) / static_cast<double>(p.frames - 1) : 0.0;
    resample_frame(x, out, p, t, [&](double y, double xx) { return std::pair{y - shift * uy, xx - shift * ux}; });
  }
  return out;
}

Tensor<float> corrupt(const Tensor<float>& x, CorruptionKind kind, double param, std::uint64_t seed) {
  const Planes p = planes_of(x);
  if (is_temporal(kind) && x.rank() != 4) {
    throw ContractError(std::string(to_string(kind)) + " corruption needs video input (C,T,H,W)");
  }
  if (param == 0.0) return x;
  Rng rng(seed, "corruption/" + std::string(to_string(kind)));
  switch (kind) {
    case CorruptionKind::gaussian: return map_values(x, [&](double v) { return v + param * rng.normal(); });
    case CorruptionKind::shot:
      return map_values(x, [&](double v) { return static_cast<double>(rng.poisson(v * param)) / param; });
    case CorruptionKind::impulse:
      return map_values(x, [&](double v) {
        if (rng.uniform() >= param) return v;
        return rng.uniform() < 0.5 ? 0.0 : 1.0;
      });
    case CorruptionKind::speckle: return map_values(x, [&](double v) { return v + v * param * rng.normal(); });
    case CorruptionKind::defocus_blur: return defocus(x, param);
    case CorruptionKind::motion_blur: return motion(x, param, rng);
    case CorruptionKind::contrast: return contrast(x, param);
    case CorruptionKind::brightness: return map_values(x, [&](double v) { return v + param; });
    case CorruptionKind::pixelate: return pixelate(x, param);
    case CorruptionKind::quantize: {
      const double levels = std::max(2.0, std::round(param));
      return map_values(x, [&](double v) { return std::round(v * (levels - 1)) / (levels - 1); });
    }
    case CorruptionKind::packet_loss: return packet_loss(x, param, rng);
    case CorruptionKind::rain: return rain(x, param, rng);
    case CorruptionKind::jumble: return jumble(x, param, rng);
    case CorruptionKind::box_jumble: return box_jumble(x, param, rng);
    case CorruptionKind::static_rotate: return rotate(x, param);
    case CorruptionKind::translate: return translate(x, param, rng);
  }
  (void)p;
  return x;
}

}  // namespace

std::string_view to_string(CorruptionKind kind) { return info(kind).name; }

CorruptionKind parse_corruption_kind(std::string_view text) {
  for (const KindInfo& k : kKinds) {
    if (text == k.name) return k.kind;
  }
  throw ConfigError("unknown corruption '" + std::string(text) + "'");
}

const std::array<CorruptionKind, kNumCorruptionKinds>& all_corruption_kinds() {
  static const std::array<CorruptionKind, kNumCorruptionKinds> kinds = [] {
    std::array<CorruptionKind, kNumCorruptionKinds> out{};
    for (std::size_t i = 0; i < kNumCorruptionKinds; ++i) out[i] = kKinds[i].kind;
    return out;
  }();
  return kinds;
}

bool is_temporal(CorruptionKind kind) {
  return kind == CorruptionKind::jumble || kind == CorruptionKind::box_jumble || kind == CorruptionKind::translate;
}

std::string_view corruption_category(CorruptionKind kind) { return info(kind).category; }

double severity_parameter(CorruptionKind kind, int severity) {
  if (severity < 1 || severity > kMaxSeverity) {
    throw ContractError("severity must be in [1, 5], got " + std::to_string(severity));
  }
  return info(kind).table[static_cast<std::size_t>(severity - 1)];
}

Tensor<float> apply_corruption(const Tensor<float>& x, const CorruptionSpec& spec) {
  const double param = spec.parameter ? *spec.parameter : severity_parameter(spec.kind, spec.severity);
  return corrupt(x, spec.kind, param, spec.seed);
}

bool is_resampled_in_sequences(CorruptionKind kind) {
  switch (kind) {
    case CorruptionKind::gaussian:
    case CorruptionKind::shot:
    case CorruptionKind::impulse:
    case CorruptionKind::speckle:
    case CorruptionKind::packet_loss:
    case CorruptionKind::rain:
    case CorruptionKind::jumble:
    case CorruptionKind::box_jumble: return true;
    default: return false;
  }
}

namespace {

// Parameter at walk position s in (0, 1] towards the severity value.
double walk_parameter(CorruptionKind kind, double target, double s) {
  switch (kind) {
    case CorruptionKind::quantize: return std::round(std::pow(256.0, 1.0 - s) * std::pow(target, s));
    case CorruptionKind::pixelate: return std::round(1.0 + s * (target - 1.0));
    case CorruptionKind::motion_blur: return std::round(1.0 + s * (target - 1.0));
    default: return s * target;
  }
}

}  // namespace

std::vector<Tensor<float>> make_perturbation_sequence(const Tensor<float>& x, const PerturbationSequenceSpec& spec) {
  if (spec.length < 2) throw ContractError("perturbation sequences need length >= 2");
  const double target = severity_parameter(spec.kind, spec.severity);
  std::vector<Tensor<float>> out;
  out.reserve(spec.length);
  out.push_back(x);
  const Rng seeds(spec.seed, "sequence/" + std::string(to_string(spec.kind)));
  for (std::size_t j = 1; j < spec.length; ++j) {
    Rng r = seeds.fork(std::to_string(j));
    const std::uint64_t seed = r.next_u64();
    if (is_resampled_in_sequences(spec.kind)) {
      out.push_back(corrupt(x, spec.kind, target, seed));
    } else {
      const double s = static_cast<double>(j) / static_cast<double>(spec.length - 1);
      // Walk kinds keep one seed so only the parameter changes along the sequence.
      out.push_back(corrupt(x, spec.kind, walk_parameter(spec.kind, target, s), spec.seed));
    }
  }
  return out;
}

}  // namespace rf
