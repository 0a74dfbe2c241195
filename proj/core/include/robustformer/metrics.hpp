#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

namespace rf {

// Errors and accuracies are percentages in [0, 100] throughout.

enum class ConditionKind { clean, corruption, sequence };

std::string_view to_string(ConditionKind kind);
ConditionKind parse_condition_kind(std::string_view text);

/// One prediction. For corruption records `detail` is the corruption name and
/// `level` the severity; for sequence records `detail` is the perturbation
/// kind and `level` the 1-based position (1 = clean frame); clean records use
/// detail "-" and level 0.
struct PredictionRecord {
  std::string sample_id;
  ConditionKind kind = ConditionKind::clean;
  std::string detail = "-";
  int level = 0;
  int predicted = 0;
  int truth = 0;

  auto key() const { return std::tie(sample_id, kind, detail, level); }
  friend bool operator==(const PredictionRecord&, const PredictionRecord&) = default;
};

class PredictionLog {
 public:
  PredictionLog() = default;
  explicit PredictionLog(std::vector<PredictionRecord> records);

  void add(PredictionRecord r) { records_.push_back(std::move(r)); }
  const std::vector<PredictionRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }

  /// Unique keys, and every non-clean sample id also present as clean.
  /// Throws DataError.
  void validate() const;
  /// Sorts by (sample id, condition kind, detail, level).
  void sort();

  /// Tab-separated: sample-id, condition-kind, detail, level, predicted, true.
  void write(std::ostream& out) const;
  static PredictionLog read(std::istream& in);
  void save(const std::string& path) const;
  static PredictionLog load(const std::string& path);

 private:
  std::vector<PredictionRecord> records_;
};

class BaselineErrorTable {
 public:
  /// Entries must lie in (0, 100]; zero is rejected with a DivisionError.
  void set(const std::string& corruption, int severity, double error);
  double error(const std::string& corruption, int severity) const;
  bool contains(const std::string& corruption, int severity) const;
  const std::map<std::pair<std::string, int>, double>& entries() const { return entries_; }

  /// Lines of `corruption<TAB>severity<TAB>error`; '#' starts a comment.
  static BaselineErrorTable read(std::istream& in);
  static BaselineErrorTable load(const std::string& path);
  void write(std::ostream& out) const;

 private:
  std::map<std::pair<std::string, int>, double> entries_;
};

double clean_accuracy(const PredictionLog& log);
/// Top-1 accuracy / error for one (corruption, severity) cell; DataError when
/// the log has no record for it.
double corrupted_accuracy(const PredictionLog& log, const std::string& corruption, int severity);
double corrupted_error(const PredictionLog& log, const std::string& corruption, int severity);

/// Sum of model errors over sum of baseline errors.
double corruption_error(std::span<const double> model_errors, std::span<const double> baseline_errors);
/// CE for corruption c over severities 1..5.
double corruption_error(const PredictionLog& log, const BaselineErrorTable& baseline, const std::string& corruption);

struct CorruptionErrorSummary {
  std::vector<std::pair<std::string, double>> per_corruption;
  double mce = 0.0;
  double mce_percent = 0.0;  // mce x 100
};

CorruptionErrorSummary mean_corruption_error(const PredictionLog& log, const BaselineErrorTable& baseline,
                                             const std::vector<std::string>& corruptions);

/// Flips relative to position 1 divided by sum over sequences of (n - 1).
double flip_probability(const PredictionLog& log, const std::string& kind);

struct FlipSummary {
  std::vector<std::pair<std::string, double>> per_kind;
  double mfp = 0.0;
};
FlipSummary mean_flip_probability(const PredictionLog& log, const std::vector<std::string>& kinds);

struct RobustnessScores {
  double absolute = 1.0;
  double relative = 1.0;
};

/// gamma_a = 1 - (A_c - A_ps) / 100, gamma_r = 1 - (A_c - A_ps) / A_c. With
/// clamp, scores above 1 (accuracy gains) are clipped to 1.
RobustnessScores robustness_scores(double clean_accuracy, double corrupted_accuracy, bool clamp = false);

/// Scores averaged over severities 1..5 for one corruption.
RobustnessScores corruption_robustness(const PredictionLog& log, const std::string& corruption, bool clamp = false);

/// Average over severities, then over the listed corruptions of one category.
RobustnessScores category_robustness(const PredictionLog& log, const std::vector<std::string>& corruptions,
                                     bool clamp = false);

}  // namespace rf
