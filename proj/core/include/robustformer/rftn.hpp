#pragma once

#include <filesystem>
#include <iosfwd>
#include <variant>

#include "robustformer/tensor.hpp"

namespace rf {

/// A tensor read from disk whose dtype is only known at run time.
using AnyTensor = std::variant<Tensor<float>, Tensor<double>>;

// RFTN layout: "RFTN", version byte (1), dtype byte (0 = f32, 1 = f64),
// rank byte, rank x u64 LE dims, raw LE payload.
inline constexpr std::uint8_t kRftnVersion = 1;

template <typename T>
void write_rftn(std::ostream& out, const Tensor<T>& t);
template <typename T>
void save_rftn(const std::filesystem::path& path, const Tensor<T>& t);

/// Reads one tensor; `base_offset` only affects error messages.
AnyTensor read_rftn(std::istream& in, std::uint64_t base_offset = 0);
AnyTensor load_rftn(const std::filesystem::path& path);

/// Reads a tensor and converts it to T if the stored dtype differs.
template <typename T>
Tensor<T> load_rftn_as(const std::filesystem::path& path);
template <typename T>
Tensor<T> as_dtype(AnyTensor any);

std::size_t rftn_encoded_size(const Shape& shape, DType dtype);

}  // namespace rf
