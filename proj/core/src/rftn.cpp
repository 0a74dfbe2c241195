#include "robustformer/rftn.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace rf {
namespace {

constexpr std::array<char, 4> kMagic = {'R', 'F', 'T', 'N'};

void put_u64(std::ostream& out, std::uint64_t v) {
  std::array<char, 8> b{};
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b.data(), 8);
}

template <typename T>
void put_scalar(std::ostream& out, T v) {
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  const U bits = std::bit_cast<U>(v);
  std::array<char, sizeof(T)> b{};
  for (std::size_t i = 0; i < sizeof(T); ++i) b[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
  out.write(b.data(), sizeof(T));
}

class Reader {
 public:
  Reader(std::istream& in, std::uint64_t base) : in_(in), offset_(base) {}

  void read(char* dst, std::size_t n, const char* what) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      throw FormatError(std::string("RFTN: truncated ") + what, offset_ + in_.gcount());
    }
    offset_ += n;
  }
  std::uint8_t u8(const char* what) {
    char c;
    read(&c, 1, what);
    return static_cast<std::uint8_t>(c);
  }
  std::uint64_t u64(const char* what) {
    std::array<unsigned char, 8> b{};
    read(reinterpret_cast<char*>(b.data()), 8, what);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    return v;
  }
  std::uint64_t offset() const { return offset_; }

 private:
  std::istream& in_;
  std::uint64_t offset_;
};

template <typename T>
Tensor<T> read_payload(Reader& r, Shape shape) {
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  const std::size_t n = shape_size(shape);
  std::vector<unsigned char> raw(n * sizeof(T));
  r.read(reinterpret_cast<char*>(raw.data()), raw.size(), "payload");
  std::vector<T> data(n);
  for (std::size_t i = 0; i < n; ++i) {
    U bits = 0;
    for (int k = static_cast<int>(sizeof(T)) - 1; k >= 0; --k) bits = (bits << 8) | raw[i * sizeof(T) + k];
    data[i] = std::bit_cast<T>(bits);
  }
  return Tensor<T>(std::move(shape), std::move(data));
}

}  // namespace

template <typename T>
void write_rftn(std::ostream& out, const Tensor<T>& t) {
  if (t.empty()) throw ContractError("write_rftn: cannot serialise a null tensor");
  if (t.rank() > 255) throw ContractError("write_rftn: rank exceeds 255");
  out.write(kMagic.data(), kMagic.size());
  out.put(static_cast<char>(kRftnVersion));
  out.put(static_cast<char>(dtype_of<T>()));
  out.put(static_cast<char>(t.rank()));
  for (std::size_t d : t.shape()) put_u64(out, d);
  for (T v : t.data()) put_scalar(out, v);
  if (!out) throw Error("write_rftn: stream write failed");
}

template <typename T>
void save_rftn(const std::filesystem::path& path, const Tensor<T>& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  write_rftn(out, t);
}

AnyTensor read_rftn(std::istream& in, std::uint64_t base_offset) {
  Reader r(in, base_offset);
  std::array<char, 4> magic{};
  const std::uint64_t start = r.offset();
  r.read(magic.data(), 4, "magic");
  if (magic != kMagic) throw FormatError("RFTN: bad magic", start);
  const std::uint8_t version = r.u8("version");
  if (version != kRftnVersion) {
    throw FormatError("RFTN: unsupported version " + std::to_string(version), r.offset() - 1);
  }
  const std::uint8_t dtype = r.u8("dtype");
  if (dtype > 1) throw FormatError("RFTN: unknown dtype " + std::to_string(dtype), r.offset() - 1);
  const std::uint8_t rank = r.u8("rank");
  Shape shape(rank);
  for (auto& d : shape) {
    d = r.u64("dimension");
    if (d == 0) throw FormatError("RFTN: zero dimension", r.offset() - 8);
  }
  if (dtype == static_cast<std::uint8_t>(DType::float32)) return read_payload<float>(r, std::move(shape));
  return read_payload<double>(r, std::move(shape));
}

AnyTensor load_rftn(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return read_rftn(in);
}

template <typename T>
Tensor<T> as_dtype(AnyTensor any) {
  return std::visit(
      [](auto&& t) -> Tensor<T> {
        using Held = typename std::decay_t<decltype(t)>::value_type;
        if constexpr (std::is_same_v<Held, T>) {
          return std::move(t);
        } else {
          return t.template cast<T>();
        }
      },
      std::move(any));
}

template <typename T>
Tensor<T> load_rftn_as(const std::filesystem::path& path) {
  return as_dtype<T>(load_rftn(path));
}

std::size_t rftn_encoded_size(const Shape& shape, DType dtype) {
  const std::size_t width = dtype == DType::float32 ? 4 : 8;
  return 4 + 1 + 1 + 1 + 8 * shape.size() + width * shape_size(shape);
}

template void write_rftn(std::ostream&, const Tensor<float>&);
template void write_rftn(std::ostream&, const Tensor<double>&);
template void save_rftn(const std::filesystem::path&, const Tensor<float>&);
template void save_rftn(const std::filesystem::path&, const Tensor<double>&);
template Tensor<float> load_rftn_as(const std::filesystem::path&);
template Tensor<double> load_rftn_as(const std::filesystem::path&);
template Tensor<float> as_dtype(AnyTensor);
template Tensor<double> as_dtype(AnyTensor);

}  // namespace rf
