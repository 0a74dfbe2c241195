#include "robustformer/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "robustformer/error.hpp"

namespace rf {

std::string_view to_string(ConditionKind kind) {
  switch (kind) {
    case ConditionKind::clean: return "clean";
    case ConditionKind::corruption: return "corruption";
    case ConditionKind::sequence: return "sequence";
  }
  return "?";
}

ConditionKind parse_condition_kind(std::string_view text) {
  if (text == "clean") return ConditionKind::clean;
  if (text == "corruption") return ConditionKind::corruption;
  if (text == "sequence") return ConditionKind::sequence;
  throw FormatError("unknown condition kind '" + std::string(text) + "'");
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    out.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return out;
}

template <typename N>
N parse_number(const std::string& text, std::size_t line_no, const char* what) {
  N value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw FormatError("line " + std::to_string(line_no) + ": bad " + what + " '" + text + "'");
  }
  return value;
}

double parse_double(const std::string& text, std::size_t line_no, const char* what) {
  std::istringstream is(text);
  is.imbue(std::locale::classic());
  double v = 0;
  if (!(is >> v) || !is.eof()) throw FormatError("line " + std::to_string(line_no) + ": bad " + what + " '" + text + "'");
  return v;
}

double percent(std::size_t hits, std::size_t total) {
  return 100.0 * static_cast<double>(hits) / static_cast<double>(total);
}

void check_percentage(double v, const char* what) {
  if (!(v >= 0.0 && v <= 100.0)) throw ContractError(std::string(what) + " must be a percentage in [0, 100]");
}

}  // namespace

PredictionLog::PredictionLog(std::vector<PredictionRecord> records) : records_(std::move(records)) {}

void PredictionLog::validate() const {
  std::set<std::tuple<std::string, ConditionKind, std::string, int>> keys;
  std::set<std::string> clean;
  for (const auto& r : records_) {
    if (!keys.insert(std::make_tuple(r.sample_id, r.kind, r.detail, r.level)).second) {
      throw DataError("duplicate prediction record for sample '" + r.sample_id + "' (" +
                      std::string(to_string(r.kind)) + " " + r.detail + " " + std::to_string(r.level) + ")");
    }
    if (r.kind == ConditionKind::clean) clean.insert(r.sample_id);
  }
  for (const auto& r : records_) {
    if (r.kind != ConditionKind::clean && !clean.count(r.sample_id)) {
      throw DataError("sample '" + r.sample_id + "' has corrupted records but no clean record");
    }
  }
}

void PredictionLog::sort() {
  std::sort(records_.begin(), records_.end(), [](const auto& a, const auto& b) { return a.key() < b.key(); });
}

void PredictionLog::write(std::ostream& out) const {
  for (const auto& r : records_) {
    out << r.sample_id << '\t' << to_string(r.kind) << '\t' << r.detail << '\t' << r.level << '\t' << r.predicted
        << '\t' << r.truth << '\n';
  }
}

PredictionLog PredictionLog::read(std::istream& in) {
  PredictionLog log;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto f = split_tabs(line);
    if (f.size() != 6) throw FormatError("line " + std::to_string(line_no) + ": expected 6 tab-separated fields");
    PredictionRecord r;
    r.sample_id = f[0];
    r.kind = parse_condition_kind(f[1]);
    r.detail = f[2];
    r.level = parse_number<int>(f[3], line_no, "level");
    r.predicted = parse_number<int>(f[4], line_no, "predicted class");
    r.truth = parse_number<int>(f[5], line_no, "true class");
    log.add(std::move(r));
  }
  return log;
}

void PredictionLog::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  write(out);
}

PredictionLog PredictionLog::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open prediction log '" + path + "'", 0);
  return read(in);
}

void BaselineErrorTable::set(const std::string& corruption, int severity, double error) {
  if (!(error > 0.0)) {
    throw DivisionError("baseline error for " + corruption + " severity " + std::to_string(severity) +
                        " must be positive");
  }
  if (error > 100.0) throw DataError("baseline error above 100% for " + corruption);
  entries_[{corruption, severity}] = error;
}

double BaselineErrorTable::error(const std::string& corruption, int severity) const {
  const auto it = entries_.find({corruption, severity});
  if (it == entries_.end()) {
    throw DataError("baseline table has no entry for " + corruption + " severity " + std::to_string(severity));
  }
  return it->second;
}

bool BaselineErrorTable::contains(const std::string& corruption, int severity) const {
  return entries_.count({corruption, severity}) != 0;
}

BaselineErrorTable BaselineErrorTable::read(std::istream& in) {
  BaselineErrorTable t;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto f = split_tabs(line);
    if (f.size() != 3) throw FormatError("line " + std::to_string(line_no) + ": expected corruption, severity, error");
    t.set(f[0], parse_number<int>(f[1], line_no, "severity"), parse_double(f[2], line_no, "error"));
  }
  return t;
}

BaselineErrorTable BaselineErrorTable::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open baseline table '" + path + "'", 0);
  return read(in);
}

void BaselineErrorTable::write(std::ostream& out) const {
  out << std::setprecision(17);
  for (const auto& [key, err] : entries_) out << key.first << '\t' << key.second << '\t' << err << '\n';
}

double clean_accuracy(const PredictionLog& log) {
  std::size_t hits = 0, total = 0;
  for (const auto& r : log.records()) {
    if (r.kind != ConditionKind::clean) continue;
    ++total;
    hits += r.predicted == r.truth;
  }
  if (total == 0) throw DataError("prediction log has no clean records");
  return percent(hits, total);
}

double corrupted_accuracy(const PredictionLog& log, const std::string& corruption, int severity) {
  std::size_t hits = 0, total = 0;
  for (const auto& r : log.records()) {
    if (r.kind != ConditionKind::corruption || r.detail != corruption || r.level != severity) continue;
    ++total;
    hits += r.predicted == r.truth;
  }
  if (total == 0) {
    throw DataError("prediction log has no records for " + corruption + " severity " + std::to_string(severity));
  }
  return percent(hits, total);
}

double corrupted_error(const PredictionLog& log, const std::string& corruption, int severity) {
  return 100.0 - corrupted_accuracy(log, corruption, severity);
}

double corruption_error(std::span<const double> model_errors, std::span<const double> baseline_errors) {
  if (model_errors.size() != baseline_errors.size()) {
    throw DataError("corruption_error: model and baseline cover different severities");
  }
  double num = 0, den = 0;
  for (std::size_t i = 0; i < model_errors.size(); ++i) {
    num += model_errors[i];
    den += baseline_errors[i];
  }
  if (den == 0.0) throw DivisionError("corruption_error: baseline errors sum to zero");
  return num / den;
}

double corruption_error(const PredictionLog& log, const BaselineErrorTable& baseline, const std::string& corruption) {
  std::vector<double> model, base;
  for (int s = 1; s <= 5; ++s) {
    model.push_back(corrupted_error(log, corruption, s));
    base.push_back(baseline.error(corruption, s));
  }
  return corruption_error(model, base);
}

CorruptionErrorSummary mean_corruption_error(const PredictionLog& log, const BaselineErrorTable& baseline,
                                             const std::vector<std::string>& corruptions) {
  if (corruptions.empty()) throw DataError("mean_corruption_error: no corruptions given");
  CorruptionErrorSummary s;
  double sum = 0;
  for (const auto& c : corruptions) {
    const double ce = corruption_error(log, baseline, c);
    s.per_corruption.emplace_back(c, ce);
    sum += ce;
  }
  s.mce = sum / static_cast<double>(corruptions.size());
  s.mce_percent = s.mce * 100.0;
  return s;
}

double flip_probability(const PredictionLog& log, const std::string& kind) {
  // sample id -> position -> prediction
  std::map<std::string, std::map<int, int>> sequences;
  for (const auto& r : log.records()) {
    if (r.kind != ConditionKind::sequence || r.detail != kind) continue;
    sequences[r.sample_id][r.level] = r.predicted;
  }
  if (sequences.empty()) throw DataError("prediction log has no sequences of kind " + kind);
  std::size_t flips = 0, comparisons = 0;
  for (const auto& [id, seq] : sequences) {
    const int n = static_cast<int>(seq.size());
    if (n < 2 || seq.begin()->first != 1 || seq.rbegin()->first != n) {
      throw DataError("sequence " + kind + " for sample '" + id + "' is incomplete");
    }
    const int first = seq.begin()->second;
    for (const auto& [pos, pred] : seq) {
      if (pos == 1) continue;
      ++comparisons;
      flips += pred != first;
    }
  }
  return static_cast<double>(flips) / static_cast<double>(comparisons);
}

FlipSummary mean_flip_probability(const PredictionLog& log, const std::vector<std::string>& kinds) {
  if (kinds.empty()) throw DataError("mean_flip_probability: no perturbation kinds given");
  FlipSummary s;
  double sum = 0;
  for (const auto& k : kinds) {
    const double fp = flip_probability(log, k);
    s.per_kind.emplace_back(k, fp);
    sum += fp;
  }
  s.mfp = sum / static_cast<double>(kinds.size());
  return s;
}

RobustnessScores robustness_scores(double clean, double corrupted, bool clamp) {
  check_percentage(clean, "clean accuracy");
  check_percentage(corrupted, "corrupted accuracy");
  if (clean == 0.0) throw DivisionError("relative robustness needs a nonzero clean accuracy");
  RobustnessScores s;
  s.absolute = 1.0 - (clean - corrupted) / 100.0;
  s.relative = 1.0 - (clean - corrupted) / clean;
  if (clamp) {
    s.absolute = std::min(s.absolute, 1.0);
    s.relative = std::min(s.relative, 1.0);
  }
  return s;
}

RobustnessScores corruption_robustness(const PredictionLog& log, const std::string& corruption, bool clamp) {
  const double clean = clean_accuracy(log);
  RobustnessScores mean{0.0, 0.0};
  for (int s = 1; s <= 5; ++s) {
    const RobustnessScores r = robustness_scores(clean, corrupted_accuracy(log, corruption, s), clamp);
    mean.absolute += r.absolute;
    mean.relative += r.relative;
  }
  mean.absolute /= 5.0;
  mean.relative /= 5.0;
  return mean;
}

RobustnessScores category_robustness(const PredictionLog& log, const std::vector<std::string>& corruptions,
                                     bool clamp) {
  if (corruptions.empty()) throw DataError("category_robustness: empty category");
  RobustnessScores mean{0.0, 0.0};
  for (const auto& c : corruptions) {
    const RobustnessScores r = corruption_robustness(log, c, clamp);
    mean.absolute += r.absolute;
    mean.relative += r.relative;
  }
  mean.absolute /= static_cast<double>(corruptions.size());
  mean.relative /= static_cast<double>(corruptions.size());
  return mean;
}

}  // namespace rf
