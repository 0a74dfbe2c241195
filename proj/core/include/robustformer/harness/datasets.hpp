#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "robustformer/tensor.hpp"

namespace rf {

/// Samples stacked along axis 0: (N, C, H, W) images or (N, C, T, H, W) clips,
/// values in [0, 1].
struct Dataset {
  Tensor<float> inputs;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  Shape sample_shape() const { return Shape(inputs.shape().begin() + 1, inputs.shape().end()); }
  Tensor<float> sample(std::size_t i) const;
  /// Stacks the listed samples into a batch.
  Tensor<float> batch(std::span<const std::size_t> indices) const;
  std::vector<int> batch_labels(std::span<const std::size_t> indices) const;
  /// First `n` samples (all when n is 0 or larger than the set).
  Dataset head(std::size_t n) const;
};

inline constexpr std::uint32_t kIdxImageMagic = 2051;
inline constexpr std::uint32_t kIdxLabelMagic = 2049;

/// Raw IDX image bytes: (N, rows, cols).
struct IdxImages {
  std::uint32_t count = 0, rows = 0, cols = 0;
  std::vector<std::uint8_t> pixels;
};

IdxImages read_idx_images(const std::filesystem::path& path);
std::vector<std::uint8_t> read_idx_labels(const std::filesystem::path& path);
void write_idx_images(const std::filesystem::path& path, const IdxImages& images);
void write_idx_labels(const std::filesystem::path& path, std::span<const std::uint8_t> labels);

/// Pixels divided by 255; a channel axis of 1 is added. FormatError when the
/// label count differs from the image count.
Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels);

/// Saves images in [0, 1] as IDX bytes (rounded); inputs must be (N, 1, H, W).
void save_idx(const Dataset& data, const std::filesystem::path& images, const std::filesystem::path& labels);

/// A directory of RFTN clips listed in labels.tsv (`file<TAB>label`). All
/// clips must share one (C, T, H, W) shape.
Dataset load_video_dir(const std::filesystem::path& dir);
void save_video_dir(const Dataset& data, const std::filesystem::path& dir);

/// Seven-segment style digits 0..9 on a 28x28 canvas with random placement,
/// scale, slant, stroke width and intensity.
Dataset synthetic_digits(std::size_t count, std::uint64_t seed);

/// One moving shape per clip of (1, frames, size, size). Classes by motion:
/// 0 right, 1 left, 2 down, 3 up, 4 static, 5..9 the four diagonals and a
/// back-and-forth bounce.
Dataset synthetic_shapes(std::size_t count, std::size_t frames, std::size_t size, std::size_t classes,
                         std::uint64_t seed);

}  // namespace rf
