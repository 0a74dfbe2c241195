#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "robustformer/tensor.hpp"

namespace rf {

enum class CorruptionKind {
  gaussian,
  shot,
  impulse,
  speckle,
  defocus_blur,
  motion_blur,
  contrast,
  brightness,
  pixelate,
  quantize,
  packet_loss,
  rain,
  jumble,
  box_jumble,
  static_rotate,
  translate,
};

inline constexpr std::size_t kNumCorruptionKinds = 16;
inline constexpr int kMaxSeverity = 5;

std::string_view to_string(CorruptionKind kind);
CorruptionKind parse_corruption_kind(std::string_view text);
const std::array<CorruptionKind, kNumCorruptionKinds>& all_corruption_kinds();

/// jumble, box-jumble and translate act across frames and need video input.
bool is_temporal(CorruptionKind kind);
/// noise | blur | digital | weather | temporal | camera
std::string_view corruption_category(CorruptionKind kind);

/// Severity table lookup, severity in [1, 5]:
///   gaussian sigma       .04 .08 .12 .18 .26
///   shot lambda          60  25  12  5   3
///   impulse fraction     .02 .04 .07 .11 .17
///   speckle sigma        .15 .20 .35 .45 .60
///   defocus radius       1   1.5 2   2.5 3
///   motion length        3   5   7   9   11
///   contrast reduction   .6  .7  .8  .9  .95
///   brightness shift     .1  .2  .3  .4  .5
///   pixelate factor      2   3   4   5   6
///   quantize levels      32  16  8   6   4
///   packet-loss area     .05 .1  .2  .3  .4
///   rain density         .01 .02 .04 .06 .10
///   jumble window        2   3   4   6   8
///   box-jumble block     8   6   4   3   2
///   rotate degrees       5   10  15  20  30
///   translate pixels     2   4   6   8   12
double severity_parameter(CorruptionKind kind, int severity);

struct CorruptionSpec {
  CorruptionKind kind = CorruptionKind::gaussian;
  int severity = 1;
  std::uint64_t seed = 0;
  /// Overrides the table value; 0 is the null corruption for every kind.
  std::optional<double> parameter;
};

/// x is an image (C, H, W) or a video (C, T, H, W) with values in [0, 1].
/// The result is clipped to [0, 1] and depends only on (x, spec).
Tensor<float> apply_corruption(const Tensor<float>& x, const CorruptionSpec& spec);

struct PerturbationSequenceSpec {
  CorruptionKind kind = CorruptionKind::gaussian;
  std::size_t length = 11;
  std::uint64_t seed = 0;
  /// Fixed severity for resampled kinds, end point of the walk for the others.
  int severity = 3;
};

/// Element 0 is x itself. Noise-like kinds resample at fixed severity with a
/// fresh seed per element; the others walk their parameter monotonically
/// from near zero up to the severity value.
std::vector<Tensor<float>> make_perturbation_sequence(const Tensor<float>& x, const PerturbationSequenceSpec& spec);

/// True for kinds whose sequences are resamples rather than parameter walks.
bool is_resampled_in_sequences(CorruptionKind kind);

}  // namespace rf
