#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "robustformer/corruptions.hpp"
#include "robustformer/harness/config.hpp"
#include "robustformer/harness/datasets.hpp"
#include "robustformer/metrics.hpp"

namespace rf {

/// Files written by one command. Unless commit() is called, the destructor
/// deletes them (and the directory, if this run created it).
class OutputDir {
 public:
  explicit OutputDir(std::filesystem::path dir);
  ~OutputDir();
  OutputDir(const OutputDir&) = delete;
  OutputDir& operator=(const OutputDir&) = delete;

  const std::filesystem::path& path() const { return dir_; }
  /// Registers and returns dir/relative, creating parent directories.
  std::filesystem::path file(const std::filesystem::path& relative);
  void write_text(const std::filesystem::path& relative, std::string_view text);
  void commit() { committed_ = true; }

 private:
  std::filesystem::path dir_;
  bool created_ = false;
  bool committed_ = false;
  std::vector<std::filesystem::path> files_;
  std::vector<std::filesystem::path> dirs_;
};

/// Loads the "train" or "test" split named by data.* keys, truncated to
/// data.limit_<split> samples when that is nonzero.
Dataset load_split(const RunConfig& cfg, std::string_view split);

void cmd_pretrain(const RunConfig& cfg, std::ostream& log);
void cmd_finetune(const RunConfig& cfg, std::ostream& log);
void cmd_evaluate(const RunConfig& cfg, std::ostream& log);
void cmd_corrupt(const RunConfig& cfg, std::ostream& log);
void cmd_metrics(const RunConfig& cfg, std::ostream& log);
void cmd_dwt(const RunConfig& cfg, std::ostream& log);
void cmd_synth(const RunConfig& cfg, std::ostream& log);

const std::vector<std::string>& command_names();

/// Dispatches by name. Returns 0 on success; on any error prints one
/// diagnostic line to `err` and returns 1 (partial outputs already removed).
int run_command(std::string_view name, const RunConfig& cfg, std::ostream& log, std::ostream& err);

struct EvaluationRequest {
  const MaeModel<float>* model = nullptr;
  const Dataset* data = nullptr;
  std::vector<CorruptionKind> corruptions;
  std::vector<int> severities{1, 2, 3, 4, 5};
  std::vector<CorruptionKind> sequences;
  std::size_t sequence_length = 11;
  int sequence_severity = 3;
  /// Number of leading test samples that get sequences; 0 means all.
  std::size_t sequence_samples = 0;
  std::uint64_t seed = 0;
  std::size_t batch_size = 64;
};

/// Predictions over clean, corrupted and sequence conditions. Cells run in
/// parallel; the result is sorted, so it does not depend on the worker count.
/// Sample ids are zero-padded test indices.
PredictionLog evaluate_predictions(const EvaluationRequest& request);

/// Seed of the corruption applied to test sample `index` in one cell.
std::uint64_t corruption_seed(std::uint64_t master, CorruptionKind kind, int severity, std::size_t index);

}  // namespace rf
