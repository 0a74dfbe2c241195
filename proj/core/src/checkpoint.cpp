#include "robustformer/checkpoint.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <set>

namespace rf {

namespace {

constexpr std::array<char, 4> kMagic{'R', 'F', 'C', 'K'};
constexpr const char* kStep = "meta/step";
constexpr const char* kSeedHi = "meta/seed_hi";
constexpr const char* kSeedLo = "meta/seed_lo";
constexpr const char* kConfig = "meta/config";

bool is_meta(const std::string& name) { return name.rfind("meta/", 0) == 0; }

template <typename T>
std::vector<CheckpointRecord> named(const ModelWeights<T>& w, const std::string& prefix) {
  std::vector<CheckpointRecord> out;
  for (const auto& [name, t] : w.parameters()) out.emplace_back(prefix + name, *t);
  return out;
}

}  // namespace

void write_checkpoint_records(const std::filesystem::path& path, const std::vector<CheckpointRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out.write(kMagic.data(), kMagic.size());
  out.put(static_cast<char>(kCheckpointVersion));
  const auto count = static_cast<std::uint32_t>(records.size());
  for (int i = 0; i < 4; ++i) out.put(static_cast<char>((count >> (8 * i)) & 0xff));
  for (const auto& [name, tensor] : records) {
    if (name.size() > 0xffff) throw ContractError("checkpoint record name too long");
    const auto len = static_cast<std::uint16_t>(name.size());
    out.put(static_cast<char>(len & 0xff));
    out.put(static_cast<char>(len >> 8));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    std::visit([&](const auto& t) { write_rftn(out, t); }, tensor);
  }
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

std::vector<CheckpointRecord> read_checkpoint_records(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint '" + path.string() + "'", 0);
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw FormatError("not an RFCK checkpoint", 0);
  const int version = in.get();
  if (version != kCheckpointVersion) throw FormatError("unsupported checkpoint version", 4);
  std::array<unsigned char, 4> cb{};
  in.read(reinterpret_cast<char*>(cb.data()), 4);
  if (!in) throw FormatError("truncated checkpoint header", 5);
  const std::uint32_t count = cb[0] | (cb[1] << 8) | (cb[2] << 16) | (static_cast<std::uint32_t>(cb[3]) << 24);

  std::vector<CheckpointRecord> records;
  std::set<std::string> seen;
  for (std::uint32_t r = 0; r < count; ++r) {
    const auto offset = static_cast<std::uint64_t>(in.tellg());
    std::array<unsigned char, 2> lb{};
    in.read(reinterpret_cast<char*>(lb.data()), 2);
    if (!in) throw FormatError("truncated checkpoint record header", offset);
    const std::size_t len = lb[0] | (lb[1] << 8);
    std::string name(len, '\0');
    in.read(name.data(), static_cast<std::streamsize>(len));
    if (!in) throw FormatError("truncated checkpoint record name", offset + 2);
    if (!seen.insert(name).second) throw FormatError("duplicate checkpoint record '" + name + "'", offset);
    records.emplace_back(std::move(name), read_rftn(in, offset + 2 + len));
  }
  return records;
}

const AnyTensor* Checkpoint::find(const std::string& name) const {
  for (const auto& r : records) {
    if (r.first == name) return &r.second;
  }
  return nullptr;
}

template <typename T>
Checkpoint make_checkpoint(const ModelWeights<T>& weights, const AdamWState<T>* optimizer, std::uint64_t seed,
                           std::string config_text) {
  Checkpoint c;
  c.records = named(weights, "");
  if (optimizer) {
    for (auto& r : named(optimizer->m, "opt.m.")) c.records.push_back(std::move(r));
    for (auto& r : named(optimizer->v, "opt.v.")) c.records.push_back(std::move(r));
    c.step = optimizer->step;
  }
  c.seed = seed;
  c.config_text = std::move(config_text);
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::vector<CheckpointRecord> records = ckpt.records;
  records.emplace_back(kStep, Tensor<double>::scalar(static_cast<double>(ckpt.step)));
  records.emplace_back(kSeedHi, Tensor<double>::scalar(static_cast<double>(ckpt.seed >> 32)));
  records.emplace_back(kSeedLo, Tensor<double>::scalar(static_cast<double>(ckpt.seed & 0xffffffffULL)));
  std::vector<float> bytes;
  for (unsigned char ch : ckpt.config_text) bytes.push_back(static_cast<float>(ch));
  if (bytes.empty()) bytes.push_back(0.0f);
  const std::size_t n = bytes.size();
  records.emplace_back(kConfig, Tensor<float>(Shape{n}, std::move(bytes)));
  write_checkpoint_records(path, records);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  Checkpoint c;
  for (auto& [name, tensor] : read_checkpoint_records(path)) {
    if (name == kStep) {
      c.step = static_cast<std::uint64_t>(as_dtype<double>(tensor)[0]);
    } else if (name == kSeedHi) {
      c.seed |= static_cast<std::uint64_t>(as_dtype<double>(tensor)[0]) << 32;
    } else if (name == kSeedLo) {
      c.seed |= static_cast<std::uint64_t>(as_dtype<double>(tensor)[0]);
    } else if (name == kConfig) {
      const Tensor<double> codes = as_dtype<double>(tensor);
      for (double v : codes.values()) {
        if (v != 0.0) c.config_text.push_back(static_cast<char>(static_cast<unsigned char>(v)));
      }
    } else if (!is_meta(name)) {
      c.records.emplace_back(std::move(name), std::move(tensor));
    }
  }
  return c;
}

template <typename T>
void restore_weights(const Checkpoint& ckpt, ModelWeights<T>& weights, AdamWState<T>* optimizer) {
  std::set<std::string> used;
  auto fill = [&](ModelWeights<T>& target, const std::string& prefix, bool required) {
    for (auto& [name, t] : target.parameters()) {
      const std::string key = prefix + name;
      const AnyTensor* src = ckpt.find(key);
      if (!src) {
        if (required) throw FormatError("checkpoint is missing weight '" + key + "'");
        return false;
      }
      Tensor<T> value = as_dtype<T>(*src);
      if (value.shape() != t->shape()) {
        throw FormatError("checkpoint weight '" + key + "' has shape " + shape_string(value.shape()) +
                          ", model expects " + shape_string(t->shape()));
      }
      *t = std::move(value);
      used.insert(key);
    }
    return true;
  };
  fill(weights, "", true);
  if (optimizer) {
    AdamWState<T> state = AdamWState<T>::zeros_for(weights);
    if (fill(state.m, "opt.m.", false) && fill(state.v, "opt.v.", true)) {
      state.step = ckpt.step;
      *optimizer = std::move(state);
    } else {
      *optimizer = AdamWState<T>::zeros_for(weights);
    }
  }
  for (const auto& r : ckpt.records) {
    const bool moment = r.first.rfind("opt.", 0) == 0;
    if (!moment && !used.count(r.first)) {
      throw FormatError("checkpoint has unexpected weight '" + r.first + "'");
    }
  }
}

#define RF_INSTANTIATE_CKPT(T)                                                                        \
  template Checkpoint make_checkpoint(const ModelWeights<T>&, const AdamWState<T>*, std::uint64_t,     \
                                      std::string);                                                  \
  template void restore_weights(const Checkpoint&, ModelWeights<T>&, AdamWState<T>*);

RF_INSTANTIATE_CKPT(float)
RF_INSTANTIATE_CKPT(double)

#undef RF_INSTANTIATE_CKPT

}  // namespace rf
