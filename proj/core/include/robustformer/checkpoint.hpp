#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "robustformer/model.hpp"
#include "robustformer/optim.hpp"
#include "robustformer/rftn.hpp"

namespace rf {

// RFCK layout: "RFCK", version byte, u32 LE record count, then per record a
// u16 LE name length, the UTF-8 name and one embedded RFTN tensor.
inline constexpr std::uint8_t kCheckpointVersion = 1;

using CheckpointRecord = std::pair<std::string, AnyTensor>;

void write_checkpoint_records(const std::filesystem::path& path, const std::vector<CheckpointRecord>& records);
/// Rejects duplicate names with a FormatError.
std::vector<CheckpointRecord> read_checkpoint_records(const std::filesystem::path& path);

struct Checkpoint {
  std::vector<CheckpointRecord> records;  // weights and "opt.m." / "opt.v." moments
  std::uint64_t step = 0;
  std::uint64_t seed = 0;
  std::string config_text;

  const AnyTensor* find(const std::string& name) const;
};

template <typename T>
Checkpoint make_checkpoint(const ModelWeights<T>& weights, const AdamWState<T>* optimizer, std::uint64_t seed,
                           std::string config_text);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Copies every named weight of the checkpoint into `weights` (which fixes the
/// expected names and shapes); also restores moments and step when
/// `optimizer` is given and the checkpoint has them. Missing or extra weights
/// raise a FormatError.
template <typename T>
void restore_weights(const Checkpoint& ckpt, ModelWeights<T>& weights, AdamWState<T>* optimizer = nullptr);

}  // namespace rf
