#include "robustformer/harness/datasets.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <cstdio>

#include "robustformer/rftn.hpp"
#include "robustformer/rng.hpp"

namespace rf {

Tensor<float> Dataset::sample(std::size_t i) const {
  const std::array<std::size_t, 1> idx{i};
  return batch(idx).reshaped(sample_shape());
}

Tensor<float> Dataset::batch(std::span<const std::size_t> indices) const {
  const std::size_t per = shape_size(sample_shape());
  std::vector<float> data;
  data.reserve(per * indices.size());
  for (std::size_t i : indices) {
    if (i >= size()) throw ContractError("dataset index out of range");
    const auto begin = inputs.data().begin() + static_cast<std::ptrdiff_t>(i * per);
    data.insert(data.end(), begin, begin + static_cast<std::ptrdiff_t>(per));
  }
  Shape shape = sample_shape();
  shape.insert(shape.begin(), indices.size());
  return Tensor<float>(shape, std::move(data));
}

std::vector<int> Dataset::batch_labels(std::span<const std::size_t> indices) const {
  std::vector<int> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(labels.at(i));
  return out;
}

Dataset Dataset::head(std::size_t n) const {
  if (n == 0 || n >= size()) return *this;
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  return {batch(idx), std::vector<int>(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(n))};
}

namespace {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path.string() + "'", 0);
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

std::uint32_t be32(const std::vector<std::uint8_t>& b, std::size_t off, const std::filesystem::path& path) {
  if (off + 4 > b.size()) throw FormatError("truncated IDX header in '" + path.string() + "'", off);
  return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) | (std::uint32_t{b[off + 2]} << 8) |
         std::uint32_t{b[off + 3]};
}

void put_be32(std::ofstream& out, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) out.put(static_cast<char>((v >> s) & 0xff));
}

}  // namespace

IdxImages read_idx_images(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  const std::uint32_t magic = be32(bytes, 0, path);
  if (magic != kIdxImageMagic) {
    throw FormatError("'" + path.string() + "' is not an IDX image file (magic " + std::to_string(magic) + ")", 0);
  }
  IdxImages img;
  img.count = be32(bytes, 4, path);
  img.rows = be32(bytes, 8, path);
  img.cols = be32(bytes, 12, path);
  const std::size_t need = std::size_t{img.count} * img.rows * img.cols;
  if (bytes.size() < 16 + need) throw FormatError("truncated IDX image data in '" + path.string() + "'", bytes.size());
  img.pixels.assign(bytes.begin() + 16, bytes.begin() + 16 + static_cast<std::ptrdiff_t>(need));
  return img;
}

std::vector<std::uint8_t> read_idx_labels(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  const std::uint32_t magic = be32(bytes, 0, path);
  if (magic != kIdxLabelMagic) {
    throw FormatError("'" + path.string() + "' is not an IDX label file (magic " + std::to_string(magic) + ")", 0);
  }
  const std::uint32_t count = be32(bytes, 4, path);
  if (bytes.size() < 8 + std::size_t{count}) {
    throw FormatError("truncated IDX label data in '" + path.string() + "'", bytes.size());
  }
  return std::vector<std::uint8_t>(bytes.begin() + 8, bytes.begin() + 8 + count);
}

void write_idx_images(const std::filesystem::path& path, const IdxImages& images) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  put_be32(out, kIdxImageMagic);
  put_be32(out, images.count);
  put_be32(out, images.rows);
  put_be32(out, images.cols);
  out.write(reinterpret_cast<const char*>(images.pixels.data()), static_cast<std::streamsize>(images.pixels.size()));
}

void write_idx_labels(const std::filesystem::path& path, std::span<const std::uint8_t> labels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  put_be32(out, kIdxLabelMagic);
  put_be32(out, static_cast<std::uint32_t>(labels.size()));
  out.write(reinterpret_cast<const char*>(labels.data()), static_cast<std::streamsize>(labels.size()));
}

Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels) {
  const IdxImages img = read_idx_images(images);
  const auto lab = read_idx_labels(labels);
  if (lab.size() != img.count) {
    throw FormatError("label file has " + std::to_string(lab.size()) + " labels for " + std::to_string(img.count) +
                          " images",
                      4);
  }
  std::vector<float> px(img.pixels.size());
  std::transform(img.pixels.begin(), img.pixels.end(), px.begin(), [](std::uint8_t b) { return b / 255.0f; });
  Dataset d;
  d.inputs = Tensor<float>(Shape{img.count, 1, img.rows, img.cols}, std::move(px));
  d.labels.assign(lab.begin(), lab.end());
  return d;
}

void save_idx(const Dataset& data, const std::filesystem::path& images, const std::filesystem::path& labels) {
  const Shape& s = data.inputs.shape();
  if (s.size() != 4 || s[1] != 1) throw ShapeError("save_idx needs (N, 1, H, W) images");
  IdxImages img;
  img.count = static_cast<std::uint32_t>(s[0]);
  img.rows = static_cast<std::uint32_t>(s[2]);
  img.cols = static_cast<std::uint32_t>(s[3]);
  img.pixels.reserve(data.inputs.size());
  for (float v : data.inputs.data()) {
    img.pixels.push_back(static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f)));
  }
  std::vector<std::uint8_t> lab;
  for (int l : data.labels) {
    if (l < 0 || l > 255) throw DataError("IDX labels must fit in a byte");
    lab.push_back(static_cast<std::uint8_t>(l));
  }
  write_idx_images(images, img);
  write_idx_labels(labels, lab);
}

Dataset load_video_dir(const std::filesystem::path& dir) {
  std::ifstream in(dir / "labels.tsv");
  if (!in) throw FormatError("video directory '" + dir.string() + "' has no labels.tsv", 0);
  std::vector<float> data;
  std::vector<int> labels;
  Shape shape;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw FormatError("labels.tsv line without a tab: '" + line + "'");
    Tensor<float> clip = load_rftn_as<float>(dir / line.substr(0, tab));
    if (clip.rank() != 4) throw FormatError("clip '" + line.substr(0, tab) + "' is not (C,T,H,W)");
    if (shape.empty()) shape = clip.shape();
    if (clip.shape() != shape) {
      throw DataError("clip '" + line.substr(0, tab) + "' has shape " + shape_string(clip.shape()) +
                      ", expected " + shape_string(shape));
    }
    data.insert(data.end(), clip.data().begin(), clip.data().end());
    labels.push_back(std::stoi(line.substr(tab + 1)));
  }
  if (labels.empty()) throw DataError("video directory '" + dir.string() + "' lists no clips");
  shape.insert(shape.begin(), labels.size());
  return {Tensor<float>(shape, std::move(data)), std::move(labels)};
}

void save_video_dir(const Dataset& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream labels(dir / "labels.tsv");
  for (std::size_t i = 0; i < data.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "clip_%06zu.rftn", i);
    save_rftn(dir / name, data.sample(i));
    labels << name << '\t' << data.labels[i] << '\n';
  }
}

namespace {

struct Segment {
  double x0, y0, x1, y1;
};

// Segments a..g of a unit seven-segment cell (x right, y down, height 2).
constexpr std::array<Segment, 7> kSegments{{
    {0, 0, 1, 0},  // a top
    {1, 0, 1, 1},  // b top right
    {1, 1, 1, 2},  // c bottom right
    {0, 2, 1, 2},  // d bottom
    {0, 1, 0, 2},  // e bottom left
    {0, 0, 0, 1},  // f top left
    {0, 1, 1, 1},  // g middle
}};

// Bit i set = segment i lit.
constexpr std::array<unsigned, 10> kDigitSegments{
    0b0111111, 0b0000110, 0b1011011, 0b1001111, 0b1100110, 0b1101101, 0b1111101, 0b0000111, 0b1111111, 0b1101111,
};

double segment_distance(double px, double py, const Segment& s) {
  const double dx = s.x1 - s.x0, dy = s.y1 - s.y0;
  const double len2 = dx * dx + dy * dy;
  const double t = std::clamp(((px - s.x0) * dx + (py - s.y0) * dy) / len2, 0.0, 1.0);
  const double qx = s.x0 + t * dx - px, qy = s.y0 + t * dy - py;
  return std::sqrt(qx * qx + qy * qy);
}

}  // namespace

Dataset synthetic_digits(std::size_t count, std::uint64_t seed) {
  constexpr std::size_t kSide = 28;
  std::vector<float> px(count * kSide * kSide, 0.0f);
  std::vector<int> labels(count);
  Rng rng(seed, "synthetic/digits");
  for (std::size_t n = 0; n < count; ++n) {
    const int digit = static_cast<int>(rng.below(10));
    labels[n] = digit;
    const double w = rng.uniform(7.0, 11.0);
    const double h = rng.uniform(14.0, 19.0);
    const double x0 = rng.uniform(4.0, kSide - 4.0 - w);
    const double y0 = rng.uniform(3.0, kSide - 3.0 - h);
    const double slant = rng.uniform(-0.2, 0.2);
    const double half = rng.uniform(0.8, 1.4);
    const double ink = rng.uniform(0.7, 1.0);
    float* img = px.data() + n * kSide * kSide;
    for (std::size_t y = 0; y < kSide; ++y) {
      for (std::size_t x = 0; x < kSide; ++x) {
        // Undo the slant about the vertical centre, then map into the unit cell.
        const double yy = static_cast<double>(y), xx = static_cast<double>(x) + slant * (yy - (y0 + h / 2));
        double best = 1e9;
        for (std::size_t s = 0; s < 7; ++s) {
          if (!(kDigitSegments[static_cast<std::size_t>(digit)] >> s & 1u)) continue;
          Segment seg = kSegments[s];
          seg = {x0 + seg.x0 * w, y0 + seg.y0 * h / 2, x0 + seg.x1 * w, y0 + seg.y1 * h / 2};
          best = std::min(best, segment_distance(xx, yy, seg));
        }
        img[y * kSide + x] = static_cast<float>(ink * std::clamp(half + 0.5 - best, 0.0, 1.0));
      }
    }
  }
  return {Tensor<float>(Shape{count, 1, kSide, kSide}, std::move(px)), std::move(labels)};
}

Dataset synthetic_shapes(std::size_t count, std::size_t frames, std::size_t size, std::size_t classes,
                         std::uint64_t seed) {
  if (classes < 3 || classes > 10) throw ConfigError("synthetic shapes support 3 to 10 motion classes");
  if (frames < 2 || size < 8) throw ConfigError("synthetic shapes need >= 2 frames and size >= 8");
  // (dy, dx) per frame; class 9 bounces horizontally.
  constexpr std::array<std::array<int, 2>, 9> kVelocity{{
      {0, 1}, {0, -1}, {1, 0}, {-1, 0}, {0, 0}, {1, 1}, {1, -1}, {-1, 1}, {-1, -1},
  }};
  const std::size_t plane = size * size;
  std::vector<float> px(count * frames * plane, 0.0f);
  std::vector<int> labels(count);
  Rng rng(seed, "synthetic/shapes");
  const long travel = static_cast<long>(frames) - 1;
  const long side = static_cast<long>(size);
  for (std::size_t n = 0; n < count; ++n) {
    const int label = static_cast<int>(rng.below(classes));
    labels[n] = label;
    const long r = 1 + static_cast<long>(rng.below(2));
    const int shape = static_cast<int>(rng.below(3));
    const float ink = static_cast<float>(rng.uniform(0.6, 1.0));
    const bool bounce = label == 9;
    const int vy = bounce ? 0 : kVelocity[static_cast<std::size_t>(label)][0];
    const int vx = bounce ? 1 : kVelocity[static_cast<std::size_t>(label)][1];
    const long reach_x = bounce ? (travel + 1) / 2 : travel * std::abs(vx);
    const long reach_y = travel * std::abs(vy);
    // Start so that the whole path stays inside the frame.
    auto start = [&](int v, long reach) {
      const long lo = r + (v < 0 ? reach : 0);
      const long hi = side - 1 - r - (v > 0 ? reach : 0);
      return lo + static_cast<long>(rng.below(static_cast<std::uint64_t>(std::max(1L, hi - lo + 1))));
    };
    const long cy = start(vy, reach_y);
    const long cx = start(vx, reach_x);
    float* clip = px.data() + n * frames * plane;
    for (std::size_t t = 0; t < frames; ++t) {
      const long step = static_cast<long>(t);
      const long ox = bounce ? reach_x - std::abs(step - reach_x) : step * vx;
      const long y = cy + step * vy, x = cx + ox;
      for (long dy = -r; dy <= r; ++dy) {
        for (long dx = -r; dx <= r; ++dx) {
          const bool on = shape == 0 || (shape == 1 && (dx == 0 || dy == 0)) || (shape == 2 && dx * dx + dy * dy <= r * r);
          const long yy = y + dy, xx = x + dx;
          if (!on || yy < 0 || xx < 0 || yy >= side || xx >= side) continue;
          clip[t * plane + static_cast<std::size_t>(yy * side + xx)] = ink;
        }
      }
    }
  }
  return {Tensor<float>(Shape{count, 1, frames, size, size}, std::move(px)), std::move(labels)};
}

}  // namespace rf
