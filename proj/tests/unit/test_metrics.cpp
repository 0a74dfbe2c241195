#include <algorithm>
#include <map>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "robustformer/error.hpp"
#include "robustformer/metrics.hpp"
#include "robustformer/rng.hpp"

using namespace rf;

namespace {

PredictionRecord clean(const std::string& id, int pred, int truth) {
  return {id, ConditionKind::clean, "-", 0, pred, truth};
}
PredictionRecord corrupted(const std::string& id, const std::string& c, int s, int pred, int truth) {
  return {id, ConditionKind::corruption, c, s, pred, truth};
}
PredictionRecord seq(const std::string& id, const std::string& k, int pos, int pred, int truth) {
  return {id, ConditionKind::sequence, k, pos, pred, truth};
}

const std::vector<std::string> kCorruptions{"gaussian", "rain", "jumble"};
const std::vector<std::string> kKinds{"brightness", "translate"};

// Random log: `samples` clean records, every corruption at severities 1..5,
// every sequence kind at positions 1..n.
PredictionLog random_log(std::size_t samples, int classes, int n, std::uint64_t seed) {
  Rng rng(seed, "test/log");
  auto draw = [&] { return static_cast<int>(rng.below(static_cast<std::uint64_t>(classes))); };
  PredictionLog log;
  for (std::size_t i = 0; i < samples; ++i) {
    const std::string id = std::to_string(1000 + i);
    const int truth = draw();
    log.add(clean(id, rng.uniform() < 0.7 ? truth : draw(), truth));
    for (const auto& c : kCorruptions) {
      for (int s = 1; s <= 5; ++s) log.add(corrupted(id, c, s, rng.uniform() < 0.8 - 0.1 * s ? truth : draw(), truth));
    }
    for (const auto& k : kKinds) {
      for (int p = 1; p <= n; ++p) log.add(seq(id, k, p, rng.uniform() < 0.6 ? truth : draw(), truth));
    }
  }
  return log;
}

BaselineErrorTable random_baseline(std::uint64_t seed) {
  Rng rng(seed, "test/baseline");
  BaselineErrorTable t;
  for (const auto& c : kCorruptions) {
    for (int s = 1; s <= 5; ++s) t.set(c, s, 20.0 + 15.0 * s * rng.uniform());
  }
  return t;
}

// Independent pass over the raw records, grouped up front.
struct Oracle {
  std::size_t clean_hits = 0, clean_total = 0;
  std::map<std::pair<std::string, int>, std::pair<std::size_t, std::size_t>> cells;  // hits, total
  std::map<std::string, std::map<std::string, std::vector<std::pair<int, int>>>> sequences;

  explicit Oracle(const PredictionLog& log) {
    for (const auto& r : log.records()) {
      const bool hit = r.predicted == r.truth;
      if (r.kind == ConditionKind::clean) {
        clean_hits += hit;
        ++clean_total;
      } else if (r.kind == ConditionKind::corruption) {
        auto& cell = cells[{r.detail, r.level}];
        cell.first += hit;
        ++cell.second;
      } else {
        sequences[r.detail][r.sample_id].emplace_back(r.level, r.predicted);
      }
    }
  }
  double clean_acc() const { return 100.0 * static_cast<double>(clean_hits) / static_cast<double>(clean_total); }
  double acc(const std::string& c, int s) const {
    const auto& cell = cells.at({c, s});
    return 100.0 * static_cast<double>(cell.first) / static_cast<double>(cell.second);
  }
  double ce(const std::string& c, const BaselineErrorTable& b) const {
    double num = 0, den = 0;
    for (int s = 1; s <= 5; ++s) {
      num += 100.0 - acc(c, s);
      den += b.error(c, s);
    }
    return num / den;
  }
  double fp(const std::string& k) const {
    std::size_t flips = 0, total = 0;
    for (auto [id, entries] : sequences.at(k)) {
      std::sort(entries.begin(), entries.end());
      for (std::size_t j = 1; j < entries.size(); ++j) {
        flips += entries[j].second != entries[0].second;
        ++total;
      }
    }
    return static_cast<double>(flips) / static_cast<double>(total);
  }
};

}  // namespace

TEST_CASE("corruption error examples") {
  const std::vector<double> model{10, 20, 30, 40, 50};
  const std::vector<double> base{20, 40, 60, 80, 100};
  CHECK(corruption_error(model, base) == 0.5);
  CHECK(corruption_error(base, base) == 1.0);
  const std::vector<double> perfect(5, 0.0);
  CHECK(corruption_error(perfect, base) == 0.0);
  CHECK_THROWS_AS(corruption_error(model, perfect), DivisionError);
}

TEST_CASE("corruption error is homogeneous") {
  const std::vector<double> model{12, 17, 33, 41, 58};
  const std::vector<double> base{22, 35, 61, 70, 90};
  for (double k : {0.5, 2.0, 0.37, 1.9}) {
    std::vector<double> m2, b2;
    for (std::size_t i = 0; i < 5; ++i) {
      m2.push_back(model[i] * k);
      b2.push_back(base[i] * k);
    }
    CHECK(corruption_error(m2, b2) == doctest::Approx(corruption_error(model, base)).epsilon(1e-12));
  }
}

TEST_CASE("flip probability examples") {
  PredictionLog constant({clean("a", 1, 1), seq("a", "k", 1, 2, 1), seq("a", "k", 2, 2, 1), seq("a", "k", 3, 2, 1)});
  CHECK(flip_probability(constant, "k") == 0.0);
  PredictionLog all({clean("a", 1, 1), seq("a", "k", 1, 0, 1), seq("a", "k", 2, 1, 1), seq("a", "k", 3, 2, 1)});
  CHECK(flip_probability(all, "k") == 1.0);
  PredictionLog half({clean("a", 1, 1), seq("a", "k", 1, 4, 1), seq("a", "k", 2, 4, 1), seq("a", "k", 3, 3, 1)});
  CHECK(flip_probability(half, "k") == 0.5);
  PredictionLog gap({clean("a", 1, 1), seq("a", "k", 1, 4, 1), seq("a", "k", 3, 3, 1)});
  CHECK_THROWS_AS(flip_probability(gap, "k"), DataError);
  PredictionLog headless({clean("a", 1, 1), seq("a", "k", 2, 4, 1), seq("a", "k", 3, 3, 1)});
  CHECK_THROWS_AS(flip_probability(headless, "k"), DataError);
  CHECK_THROWS_AS(flip_probability(half, "other"), DataError);
}

TEST_CASE("robustness score examples") {
  const RobustnessScores same = robustness_scores(80, 80);
  CHECK(same.absolute == 1.0);
  CHECK(same.relative == 1.0);
  const RobustnessScores r = robustness_scores(80, 70);
  CHECK(r.absolute == doctest::Approx(0.9));
  CHECK(r.relative == doctest::Approx(0.875));
  CHECK(robustness_scores(80, 0).relative == 0.0);
  CHECK_THROWS_AS(robustness_scores(0, 0), DivisionError);
  const RobustnessScores gain = robustness_scores(60, 75);
  CHECK(gain.absolute > 1.0);
  CHECK(gain.relative > 1.0);
  const RobustnessScores clamped = robustness_scores(60, 75, true);
  CHECK(clamped.absolute == 1.0);
  CHECK(clamped.relative == 1.0);
  CHECK_THROWS_AS(robustness_scores(101, 50), ContractError);
}

TEST_CASE("absolute robustness dominates relative under degradation") {
  Rng rng(3, "test/gamma");
  for (int i = 0; i < 500; ++i) {
    const double ac = 1.0 + 99.0 * rng.uniform();
    const double ap = ac * rng.uniform();
    const RobustnessScores r = robustness_scores(ac, ap);
    CHECK(r.absolute >= r.relative);
  }
}

TEST_CASE("metrics match a brute-force pass over the records") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const PredictionLog log = random_log(40, 5, 6, seed);
    log.validate();
    const BaselineErrorTable base = random_baseline(seed);
    const Oracle oracle(log);
    CHECK(clean_accuracy(log) == oracle.clean_acc());
    double mce = 0;
    for (const auto& c : kCorruptions) {
      for (int s = 1; s <= 5; ++s) {
        CHECK(corrupted_accuracy(log, c, s) == oracle.acc(c, s));
        CHECK(corrupted_error(log, c, s) == 100.0 - oracle.acc(c, s));
      }
      CHECK(corruption_error(log, base, c) == oracle.ce(c, base));
      mce += oracle.ce(c, base);
      double ga = 0, gr = 0;
      for (int s = 1; s <= 5; ++s) {
        const double diff = oracle.clean_acc() - oracle.acc(c, s);
        ga += 1.0 - diff / 100.0;
        gr += 1.0 - diff / oracle.clean_acc();
      }
      const RobustnessScores r = corruption_robustness(log, c);
      CHECK(r.absolute == ga / 5.0);
      CHECK(r.relative == gr / 5.0);
    }
    const CorruptionErrorSummary summary = mean_corruption_error(log, base, kCorruptions);
    CHECK(summary.mce == mce / 3.0);
    CHECK(summary.mce_percent == summary.mce * 100.0);
    double mfp = 0;
    for (const auto& k : kKinds) {
      CHECK(flip_probability(log, k) == oracle.fp(k));
      mfp += oracle.fp(k);
    }
    CHECK(mean_flip_probability(log, kKinds).mfp == mfp / 2.0);

    const RobustnessScores cat = category_robustness(log, kCorruptions);
    double ca = 0, cr = 0;
    for (const auto& c : kCorruptions) {
      ca += corruption_robustness(log, c).absolute;
      cr += corruption_robustness(log, c).relative;
    }
    CHECK(cat.absolute == ca / 3.0);
    CHECK(cat.relative == cr / 3.0);
  }
}

TEST_CASE("flip probability ignores a consistent relabelling of classes") {
  PredictionLog log = random_log(30, 4, 5, 9);
  const std::vector<int> perm{2, 0, 3, 1};
  std::vector<PredictionRecord> relabelled;
  for (auto r : log.records()) {
    r.predicted = perm[static_cast<std::size_t>(r.predicted)];
    r.truth = perm[static_cast<std::size_t>(r.truth)];
    relabelled.push_back(r);
  }
  const PredictionLog other(relabelled);
  for (const auto& k : kKinds) CHECK(flip_probability(other, k) == flip_probability(log, k));
}

TEST_CASE("missing severities and baseline entries are data errors") {
  PredictionLog log({clean("a", 1, 1), corrupted("a", "gaussian", 1, 1, 1)});
  BaselineErrorTable base;
  for (int s = 1; s <= 5; ++s) base.set("gaussian", s, 50);
  CHECK_THROWS_AS(corruption_error(log, base, "gaussian"), DataError);
  CHECK_THROWS_AS(base.error("rain", 1), DataError);
  CHECK_THROWS_AS(base.set("rain", 1, 0.0), DivisionError);
  CHECK_THROWS_AS(base.set("rain", 1, 120.0), DataError);
}

TEST_CASE("log validation") {
  PredictionLog dup({clean("a", 1, 1), clean("a", 0, 1)});
  CHECK_THROWS_AS(dup.validate(), DataError);
  PredictionLog orphan({clean("a", 1, 1), corrupted("b", "rain", 1, 0, 1)});
  CHECK_THROWS_AS(orphan.validate(), DataError);
  PredictionLog fine({clean("a", 1, 1), corrupted("a", "rain", 1, 0, 1), seq("a", "k", 1, 0, 1)});
  CHECK_NOTHROW(fine.validate());
}

TEST_CASE("log and baseline text round trip") {
  PredictionLog log = random_log(5, 3, 3, 4);
  std::ostringstream out;
  log.write(out);
  std::istringstream in(out.str());
  const PredictionLog back = PredictionLog::read(in);
  CHECK(back.records() == log.records());
  CHECK(out.str().find("1000\tclean\t-\t0\t") != std::string::npos);

  std::istringstream bad("1000\tclean\t-\t0\t1\n");
  CHECK_THROWS_AS(PredictionLog::read(bad), FormatError);
  std::istringstream kind("1000\tfoggy\t-\t0\t1\t1\n");
  CHECK_THROWS(PredictionLog::read(kind));

  const BaselineErrorTable base = random_baseline(5);
  std::ostringstream bout;
  base.write(bout);
  std::istringstream bin("# header\n" + bout.str());
  const BaselineErrorTable bback = BaselineErrorTable::read(bin);
  for (const auto& [key, value] : base.entries()) CHECK(bback.error(key.first, key.second) == doctest::Approx(value));
  std::istringstream zero("gaussian\t1\t0\n");
  CHECK_THROWS_AS(BaselineErrorTable::read(zero), DivisionError);
}

TEST_CASE("sorting orders by sample, condition, detail and level") {
  PredictionLog log({seq("b", "k", 2, 0, 0), clean("b", 0, 0), corrupted("a", "rain", 2, 0, 0), clean("a", 0, 0),
                     corrupted("a", "rain", 1, 0, 0), seq("b", "k", 1, 0, 0)});
  log.sort();
  std::vector<std::string> order;
  for (const auto& r : log.records()) order.push_back(r.sample_id + std::string(to_string(r.kind)) + std::to_string(r.level));
  CHECK(order == std::vector<std::string>{"aclean0", "acorruption1", "acorruption2", "bclean0", "bsequence1", "bsequence2"});
}
