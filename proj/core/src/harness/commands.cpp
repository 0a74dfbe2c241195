#include "robustformer/harness/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>

#include "robustformer/checkpoint.hpp"
#include "robustformer/harness/parallel.hpp"
#include "robustformer/harness/plot.hpp"
#include "robustformer/harness/trainer.hpp"
#include "robustformer/rftn.hpp"
#include "robustformer/wavelet.hpp"

namespace fs = std::filesystem;

namespace rf {

OutputDir::OutputDir(fs::path dir) : dir_(std::move(dir)) {
  if (dir_.empty()) throw ConfigError("output.dir must not be empty");
  if (!fs::exists(dir_)) {
    fs::create_directories(dir_);
    created_ = true;
  }
}

OutputDir::~OutputDir() {
  if (committed_) return;
  std::error_code ec;
  for (auto it = files_.rbegin(); it != files_.rend(); ++it) fs::remove(*it, ec);
  for (auto it = dirs_.rbegin(); it != dirs_.rend(); ++it) fs::remove(*it, ec);
  if (created_) fs::remove_all(dir_, ec);
}

fs::path OutputDir::file(const fs::path& relative) {
  const fs::path full = dir_ / relative;
  const fs::path parent = full.parent_path();
  if (!fs::exists(parent)) {
    // Remember each directory we create so a failed run leaves nothing behind.
    std::vector<fs::path> missing;
    for (fs::path p = parent; !p.empty() && !fs::exists(p); p = p.parent_path()) missing.push_back(p);
    fs::create_directories(parent);
    dirs_.insert(dirs_.end(), missing.rbegin(), missing.rend());
  }
  files_.push_back(full);
  return full;
}

void OutputDir::write_text(const fs::path& relative, std::string_view text) {
  std::ofstream out(file(relative), std::ios::binary);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error("failed writing '" + (dir_ / relative).string() + "'");
}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string padded(std::size_t i) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%06zu", i);
  return buf;
}

void write_config(OutputDir& out, const RunConfig& cfg) { out.write_text("resolved_config.txt", cfg.resolved_text()); }

TrainSettings settings_for(const RunConfig& cfg, const std::string& phase) {
  TrainSettings s;
  s.epochs = cfg.get_size(phase + ".epochs");
  s.batch_size = cfg.get_size(phase + ".batch_size");
  s.lr = cfg.get_double(phase + ".lr");
  s.warmup_fraction = cfg.get_double("optim.warmup_fraction");
  s.adam.weight_decay = cfg.get_double("optim.weight_decay");
  s.adam.beta1 = cfg.get_double("optim.beta1");
  s.adam.beta2 = cfg.get_double("optim.beta2");
  s.seed = cfg.seed();
  return s;
}

std::vector<int> parse_severities(const RunConfig& cfg, const std::string& key) {
  std::vector<int> out;
  for (const auto& s : cfg.get_list(key)) {
    int v = 0;
    try {
      v = std::stoi(s);
    } catch (const std::exception&) {
      throw ConfigError(key + ": bad severity '" + s + "'");
    }
    if (v < 1 || v > kMaxSeverity) throw ConfigError(key + ": severity " + s + " outside [1, 5]");
    out.push_back(v);
  }
  return out;
}

std::vector<CorruptionKind> parse_kinds(const RunConfig& cfg, const std::string& key) {
  std::vector<CorruptionKind> out;
  for (const auto& s : cfg.get_list(key)) out.push_back(parse_corruption_kind(s));
  return out;
}

std::string loss_log_text(const std::vector<StepRecord>& records) {
  std::string text = "step\tepoch\tlr\tloss\n";
  for (const auto& r : records) text += format_step(r) + "\n";
  return text;
}

PlotSeries loss_series(const std::vector<StepRecord>& records) {
  PlotSeries s{"loss", {}, {}};
  for (const auto& r : records) {
    s.x.push_back(static_cast<double>(r.step));
    s.y.push_back(r.loss);
  }
  return s;
}

MaeModel<float> model_from_checkpoint(const Checkpoint& ckpt, const Shape& sample_shape) {
  const RunConfig saved = RunConfig::parse(ckpt.config_text);
  MaeModel<float> model(model_config_from(saved), sample_shape, saved.seed());
  restore_weights(ckpt, model.weights());
  return model;
}

}  // namespace

Dataset load_split(const RunConfig& cfg, std::string_view split) {
  const std::string s(split);
  const std::string kind = cfg.get("data.kind");
  Dataset data;
  if (kind == "idx-images") {
    const std::string images = cfg.get("data." + s + "_images"), labels = cfg.get("data." + s + "_labels");
    if (images.empty() || labels.empty()) throw ConfigError("data." + s + "_images / _labels are required");
    data = load_idx(images, labels);
  } else if (kind == "tensor-video-dir") {
    const std::string dir = cfg.get("data." + s + "_dir");
    if (dir.empty()) throw ConfigError("data." + s + "_dir is required");
    data = load_video_dir(dir);
  } else {
    throw ConfigError("unknown data.kind '" + kind + "' (expected idx-images or tensor-video-dir)");
  }
  return data.head(cfg.get_size("data.limit_" + s));
}

void cmd_pretrain(const RunConfig& cfg, std::ostream& log) {
  const Dataset train = load_split(cfg, "train");
  OutputDir out(cfg.get("output.dir"));
  write_config(out, cfg);
  MaeModel<float> model(model_config_from(cfg), train.sample_shape(), cfg.seed());
  AdamWState<float> opt = AdamWState<float>::zeros_for(model.weights());
  log << "pretrain " << to_string(model.config().variant) << ": " << train.size() << " samples, "
      << model.weights().parameter_count() << " parameters\n";
  const auto records = pretrain(model, opt, train, settings_for(cfg, "pretrain"));
  out.write_text("loss_log.tsv", loss_log_text(records));
  out.write_text("loss.svg", svg_line_chart("pretraining loss", "step", "loss", {loss_series(records)}));
  save_checkpoint(out.file("checkpoint.rfck"), make_checkpoint(model.weights(), &opt, cfg.seed(), cfg.resolved_text()));
  if (!records.empty()) log << "final loss " << fmt(records.back().loss) << "\n";
  out.commit();
}

void cmd_finetune(const RunConfig& cfg, std::ostream& log) {
  const Dataset train = load_split(cfg, "train");
  const bool has_test = !cfg.get(cfg.get("data.kind") == "idx-images" ? "data.test_images" : "data.test_dir").empty();
  const Dataset test = has_test ? load_split(cfg, "test") : Dataset{};
  OutputDir out(cfg.get("output.dir"));
  write_config(out, cfg);
  MaeModel<float> model(model_config_from(cfg), train.sample_shape(), cfg.seed());
  if (const std::string init = cfg.get("finetune.init"); !init.empty()) {
    const Checkpoint ckpt = load_checkpoint(init);
    std::size_t copied = 0;
    for (auto& [name, t] : model.weights().parameters()) {
      if (name.rfind("embed.", 0) != 0 && name.rfind("encoder.", 0) != 0) continue;
      const AnyTensor* src = ckpt.find(name);
      if (!src) throw FormatError("pretrained checkpoint lacks '" + name + "'");
      Tensor<float> value = as_dtype<float>(*src);
      if (value.shape() != t->shape()) throw FormatError("pretrained weight '" + name + "' has a different shape");
      *t = std::move(value);
      ++copied;
    }
    log << "initialised " << copied << " encoder tensors from " << init << "\n";
  }
  AdamWState<float> opt = AdamWState<float>::zeros_for(model.weights());
  const TrainSettings settings = settings_for(cfg, "finetune");
  std::string acc_text = "epoch\ttrain_loss\ttest_top1\n";
  PlotSeries acc_series{"test top-1", {}, {}};
  const auto records = finetune(model, opt, train, settings, {}, [&](std::size_t epoch, double mean_loss) {
    const double acc = has_test ? accuracy(model, test, settings.batch_size) : 0.0;
    acc_text += std::to_string(epoch) + "\t" + fmt(mean_loss) + "\t" + (has_test ? fmt(acc) : "-") + "\n";
    acc_series.x.push_back(static_cast<double>(epoch));
    acc_series.y.push_back(acc);
    log << "epoch " << epoch << " loss " << fmt(mean_loss);
    if (has_test) log << " test top-1 " << fmt(acc) << "%";
    log << "\n";
  });
  out.write_text("loss_log.tsv", loss_log_text(records));
  out.write_text("accuracy_log.tsv", acc_text);
  out.write_text("loss.svg", svg_line_chart("finetuning loss", "step", "loss", {loss_series(records)}));
  if (has_test) out.write_text("accuracy.svg", svg_line_chart("test accuracy", "epoch", "top-1 %", {acc_series}));
  save_checkpoint(out.file("checkpoint.rfck"), make_checkpoint(model.weights(), &opt, cfg.seed(), cfg.resolved_text()));
  out.commit();
}

std::uint64_t corruption_seed(std::uint64_t master, CorruptionKind kind, int severity, std::size_t index) {
  Rng r(master, "evaluate/" + std::string(to_string(kind)) + "/" + std::to_string(severity) + "/" + std::to_string(index));
  return r.next_u64();
}

PredictionLog evaluate_predictions(const EvaluationRequest& req) {
  if (!req.model || !req.data) throw ContractError("evaluate_predictions: model and data are required");
  const MaeModel<float>& model = *req.model;
  const Dataset& data = *req.data;
  struct Cell {
    ConditionKind kind;
    CorruptionKind corruption = CorruptionKind::gaussian;
    int severity = 0;
  };
  std::vector<Cell> cells{{ConditionKind::clean}};
  for (CorruptionKind k : req.corruptions)
    for (int s : req.severities) cells.push_back({ConditionKind::corruption, k, s});
  for (CorruptionKind k : req.sequences) cells.push_back({ConditionKind::sequence, k, 0});

  const std::size_t seq_count = req.sequence_samples ? std::min(req.sequence_samples, data.size()) : data.size();
  std::vector<std::vector<PredictionRecord>> results(cells.size());
  parallel_for(cells.size(), [&](std::size_t c) {
    const Cell& cell = cells[c];
    auto& recs = results[c];
    if (cell.kind == ConditionKind::sequence) {
      for (std::size_t i = 0; i < seq_count; ++i) {
        PerturbationSequenceSpec spec;
        spec.kind = cell.corruption;
        spec.length = req.sequence_length;
        spec.severity = req.sequence_severity;
        spec.seed = corruption_seed(req.seed, cell.corruption, 0, i);
        const auto seq = make_perturbation_sequence(data.sample(i), spec);
        std::vector<float> stacked;
        for (const auto& t : seq) stacked.insert(stacked.end(), t.data().begin(), t.data().end());
        Shape shape = data.sample_shape();
        shape.insert(shape.begin(), seq.size());
        const auto pred = model.predict(Tensor<float>(shape, std::move(stacked)));
        for (std::size_t j = 0; j < seq.size(); ++j) {
          recs.push_back({padded(i), ConditionKind::sequence, std::string(to_string(cell.corruption)),
                          static_cast<int>(j + 1), pred.classes[j], data.labels[i]});
        }
      }
      return;
    }
    for (std::size_t begin = 0; begin < data.size(); begin += req.batch_size) {
      const std::size_t end = std::min(begin + req.batch_size, data.size());
      std::vector<float> stacked;
      for (std::size_t i = begin; i < end; ++i) {
        Tensor<float> x = data.sample(i);
        if (cell.kind == ConditionKind::corruption) {
          x = apply_corruption(x, {cell.corruption, cell.severity, corruption_seed(req.seed, cell.corruption, cell.severity, i), {}});
        }
        stacked.insert(stacked.end(), x.data().begin(), x.data().end());
      }
      Shape shape = data.sample_shape();
      shape.insert(shape.begin(), end - begin);
      const auto pred = model.predict(Tensor<float>(shape, std::move(stacked)));
      for (std::size_t i = begin; i < end; ++i) {
        PredictionRecord r{padded(i), cell.kind, "-", 0, pred.classes[i - begin], data.labels[i]};
        if (cell.kind == ConditionKind::corruption) {
          r.detail = std::string(to_string(cell.corruption));
          r.level = cell.severity;
        }
        recs.push_back(std::move(r));
      }
    }
  });
  PredictionLog log;
  for (auto& cell : results)
    for (auto& r : cell) log.add(std::move(r));
  log.sort();
  log.validate();
  return log;
}

void cmd_evaluate(const RunConfig& cfg, std::ostream& log) {
  const std::string ckpt_path = cfg.get("evaluate.checkpoint");
  if (ckpt_path.empty()) throw ConfigError("evaluate.checkpoint is required");
  const Dataset test = load_split(cfg, "test");
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  const MaeModel<float> model = model_from_checkpoint(ckpt, test.sample_shape());
  OutputDir out(cfg.get("output.dir"));
  write_config(out, cfg);

  EvaluationRequest req;
  req.model = &model;
  req.data = &test;
  req.corruptions = parse_kinds(cfg, "evaluate.corruptions");
  req.severities = parse_severities(cfg, "evaluate.severities");
  req.sequences = parse_kinds(cfg, "evaluate.sequences");
  req.sequence_length = cfg.get_size("evaluate.sequence_length");
  req.sequence_severity = static_cast<int>(cfg.get_int("evaluate.sequence_severity"));
  req.sequence_samples = cfg.get_size("evaluate.sequence_samples");
  req.seed = cfg.seed();
  req.batch_size = std::max<std::size_t>(1, cfg.get_size("evaluate.batch_size"));
  const PredictionLog preds = evaluate_predictions(req);
  std::ostringstream pt;
  preds.write(pt);
  out.write_text("predictions.tsv", pt.str());

  const double top1 = clean_accuracy(preds);
  const std::size_t k = std::min<std::size_t>(5, model.config().num_classes);
  const double top5 = accuracy(model, test, req.batch_size, k);
  std::string summary = "condition\tseverity\ttop1\n";
  summary += "clean\t0\t" + fmt(top1) + "\n";
  summary += "clean-top" + std::to_string(k) + "\t0\t" + fmt(top5) + "\n";
  for (CorruptionKind c : req.corruptions)
    for (int s : req.severities)
      summary += std::string(to_string(c)) + "\t" + std::to_string(s) + "\t" +
                 fmt(corrupted_accuracy(preds, std::string(to_string(c)), s)) + "\n";
  out.write_text("summary.tsv", summary);
  log << "clean top-1 " << fmt(top1) << "%, top-" << k << " " << fmt(top5) << "%, " << preds.size() << " predictions\n";
  out.commit();
}

void cmd_corrupt(const RunConfig& cfg, std::ostream& log) {
  const Dataset test = load_split(cfg, "test");
  const auto kinds = parse_kinds(cfg, "corrupt.kinds");
  const auto severities = parse_severities(cfg, "corrupt.severities");
  OutputDir out(cfg.get("output.dir"));
  write_config(out, cfg);
  std::string labels;
  for (int l : test.labels) labels += std::to_string(l) + "\n";
  out.write_text("labels.txt", labels);

  struct Job {
    CorruptionKind kind;
    int severity;
    fs::path relative;
  };
  std::vector<Job> jobs;
  for (CorruptionKind k : kinds)
    for (int s : severities) jobs.push_back({k, s, fs::path(std::string(to_string(k))) / ("s" + std::to_string(s) + ".rftn")});
  std::vector<fs::path> paths;
  for (const auto& j : jobs) paths.push_back(out.file(j.relative));
  parallel_for(jobs.size(), [&](std::size_t j) {
    std::vector<float> data;
    for (std::size_t i = 0; i < test.size(); ++i) {
      const Tensor<float> x = apply_corruption(
          test.sample(i), {jobs[j].kind, jobs[j].severity, corruption_seed(cfg.seed(), jobs[j].kind, jobs[j].severity, i), {}});
      data.insert(data.end(), x.data().begin(), x.data().end());
    }
    save_rftn(paths[j], Tensor<float>(test.inputs.shape(), std::move(data)));
  });
  std::string manifest;
  for (const auto& j : jobs) {
    manifest += j.relative.generic_string() + "\t" + std::string(to_string(j.kind)) + "\t" +
                std::to_string(j.severity) + "\t" + std::to_string(cfg.seed()) + "\n";
  }
  out.write_text("manifest.tsv", manifest);
  log << "wrote " << jobs.size() << " corrupted sets of " << test.size() << " samples\n";
  out.commit();
}

void cmd_metrics(const RunConfig& cfg, std::ostream& log) {
  const std::string pred_path = cfg.get("metrics.predictions");
  if (pred_path.empty()) throw ConfigError("metrics.predictions is required");
  PredictionLog preds = PredictionLog::load(pred_path);
  preds.validate();
  preds.sort();
  const bool clamp = cfg.get_bool("metrics.clamp");

  std::vector<std::string> corruptions = cfg.get_list("metrics.corruptions");
  std::vector<std::string> sequences = cfg.get_list("metrics.sequences");
  if (corruptions.empty() || sequences.empty()) {
    std::set<std::string> cs, ss;
    for (const auto& r : preds.records()) {
      if (r.kind == ConditionKind::corruption) cs.insert(r.detail);
      if (r.kind == ConditionKind::sequence) ss.insert(r.detail);
    }
    if (corruptions.empty()) corruptions.assign(cs.begin(), cs.end());
    if (sequences.empty()) sequences.assign(ss.begin(), ss.end());
  }

  OutputDir out(cfg.get("output.dir"));
  write_config(out, cfg);
  const double clean = clean_accuracy(preds);
  log << "clean top-1 " << fmt(clean) << "%\n";

  if (const std::string base = cfg.get("metrics.baseline"); !base.empty() && !corruptions.empty()) {
    const BaselineErrorTable table = BaselineErrorTable::load(base);
    const auto ce = mean_corruption_error(preds, table, corruptions);
    std::string text = "corruption\tCE\n";
    for (const auto& [c, v] : ce.per_corruption) text += c + "\t" + fmt(v) + "\n";
    text += "mCE\t" + fmt(ce.mce) + "\n";
    text += "mCE_x100\t" + fmt(ce.mce_percent) + "\n";
    out.write_text("ce.tsv", text);
    log << "mCE " << fmt(ce.mce_percent) << "\n";
  }

  if (!sequences.empty()) {
    const auto fp = mean_flip_probability(preds, sequences);
    std::string text = "perturbation\tFP\n";
    for (const auto& [k, v] : fp.per_kind) text += k + "\t" + fmt(v) + "\n";
    text += "mFP\t" + fmt(fp.mfp) + "\n";
    out.write_text("fp.tsv", text);
    log << "mFP " << fmt(fp.mfp) << "\n";
  }

  if (!corruptions.empty()) {
    std::string text = "corruption\tseverity\taccuracy\tgamma_a\tgamma_r\n";
    std::vector<PlotSeries> acc_plot;
    std::map<std::string, std::vector<std::string>> categories;
    for (const auto& c : corruptions) {
      PlotSeries s{c, {}, {}};
      for (int sev = 1; sev <= kMaxSeverity; ++sev) {
        const double a = corrupted_accuracy(preds, c, sev);
        const RobustnessScores g = robustness_scores(clean, a, clamp);
        text += c + "\t" + std::to_string(sev) + "\t" + fmt(a) + "\t" + fmt(g.absolute) + "\t" + fmt(g.relative) + "\n";
        s.x.push_back(sev);
        s.y.push_back(a);
      }
      acc_plot.push_back(std::move(s));
      std::string category = "other";
      try {
        category = std::string(corruption_category(parse_corruption_kind(c)));
      } catch (const ConfigError&) {
      }
      categories[category].push_back(c);
    }
    out.write_text("robustness.tsv", text);
    std::string cat_text = "category\tgamma_a\tgamma_r\n";
    for (const auto& [cat, members] : categories) {
      const RobustnessScores g = category_robustness(preds, members, clamp);
      cat_text += cat + "\t" + fmt(g.absolute) + "\t" + fmt(g.relative) + "\n";
    }
    out.write_text("categories.tsv", cat_text);
    out.write_text("accuracy_vs_severity.svg",
                   svg_line_chart("accuracy under corruption", "severity", "top-1 %", acc_plot));
  }
  out.commit();
}

void cmd_dwt(const RunConfig& cfg, std::ostream& log) {
  const std::string input = cfg.get("dwt.input");
  if (input.empty()) throw ConfigError("dwt.input is required");
  const WaveletFilter filter = WaveletFilter::builtin(cfg.get("dwt.filter"));
  const Boundary boundary = parse_boundary(cfg.get("dwt.boundary"));
  OutputDir out(cfg.get("output.dir"));
  write_config(out, cfg);

  if (cfg.get_bool("dwt.inverse")) {
    // dwt.input is a directory written by a forward run.
    std::ifstream index(fs::path(input) / "bands.tsv");
    if (!index) throw FormatError("'" + input + "' has no bands.tsv", 0);
    SubbandSet<double> set;
    std::string line;
    while (std::getline(index, line)) {
      if (line.empty()) continue;
      if (line.rfind("#axes\t", 0) == 0) {
        std::istringstream is(line.substr(6));
        for (std::size_t a; is >> a;) set.axes.push_back(a);
        continue;
      }
      if (line.rfind("#shape\t", 0) == 0) {
        std::istringstream is(line.substr(7));
        for (std::size_t d; is >> d;) set.source_shape.push_back(d);
        continue;
      }
      const auto tab = line.find('\t');
      set.labels.push_back(line.substr(0, tab));
      set.bands.push_back(load_rftn_as<double>(fs::path(input) / line.substr(tab + 1)));
    }
    const Tensor<double> rec = idwt(set, filter, boundary);
    save_rftn(out.file("reconstruction.rftn"), rec);
    log << "reconstructed " << shape_string(rec.shape()) << "\n";
    out.commit();
    return;
  }

  const Tensor<double> x = load_rftn_as<double>(input);
  std::vector<std::size_t> axes;
  for (const auto& a : cfg.get_list("dwt.axes")) axes.push_back(static_cast<std::size_t>(std::stoul(a)));
  if (axes.empty())
    for (std::size_t a = 0; a < x.rank(); ++a) axes.push_back(a);
  const SubbandSet<double> bands = dwt(x, axes, filter, boundary);
  std::string index = "#axes\t";
  for (std::size_t a : axes) index += std::to_string(a) + " ";
  index += "\n#shape\t";
  for (std::size_t d : x.shape()) index += std::to_string(d) + " ";
  index += "\n";
  for (std::size_t i = 0; i < bands.size(); ++i) {
    const std::string name = bands.labels[i] + ".rftn";
    save_rftn(out.file(name), bands.bands[i]);
    index += bands.labels[i] + "\t" + name + "\n";
  }
  out.write_text("bands.tsv", index);
  log << "wrote " << bands.size() << " bands of shape " << shape_string(bands.low().shape()) << "\n";
  out.commit();
}

void cmd_synth(const RunConfig& cfg, std::ostream& log) {
  const std::string kind = cfg.get("synth.kind");
  const std::size_t n_train = cfg.get_size("synth.train_count"), n_test = cfg.get_size("synth.test_count");
  const std::uint64_t seed = cfg.seed();
  const std::uint64_t test_seed = seed ^ fnv1a("synthetic/test-split");
  OutputDir out(cfg.get("output.dir"));
  write_config(out, cfg);
  if (kind == "digits") {
    const Dataset train = synthetic_digits(n_train, seed), test = synthetic_digits(n_test, test_seed);
    save_idx(train, out.file("train-images.idx"), out.file("train-labels.idx"));
    save_idx(test, out.file("test-images.idx"), out.file("test-labels.idx"));
  } else if (kind == "shapes") {
    const std::size_t frames = cfg.get_size("synth.frames"), size = cfg.get_size("synth.size");
    const std::size_t classes = cfg.get_size("synth.classes");
    for (const auto& [split, count, s] : {std::tuple{"train", n_train, seed}, std::tuple{"test", n_test, test_seed}}) {
      const Dataset d = synthetic_shapes(count, frames, size, classes, s);
      out.file(fs::path(split) / "labels.tsv");
      for (std::size_t i = 0; i < d.size(); ++i) out.file(fs::path(split) / ("clip_" + padded(i) + ".rftn"));
      save_video_dir(d, out.path() / split);
    }
  } else {
    throw ConfigError("synth.kind must be digits or shapes");
  }
  log << "wrote synthetic " << kind << " (" << n_train << " train, " << n_test << " test) to " << out.path().string()
      << "\n";
  out.commit();
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"pretrain", "finetune", "evaluate", "corrupt", "metrics", "dwt", "synth"};
  return names;
}

int run_command(std::string_view name, const RunConfig& cfg, std::ostream& log, std::ostream& err) {
  try {
    if (name == "pretrain") cmd_pretrain(cfg, log);
    else if (name == "finetune") cmd_finetune(cfg, log);
    else if (name == "evaluate") cmd_evaluate(cfg, log);
    else if (name == "corrupt") cmd_corrupt(cfg, log);
    else if (name == "metrics") cmd_metrics(cfg, log);
    else if (name == "dwt") cmd_dwt(cfg, log);
    else if (name == "synth") cmd_synth(cfg, log);
    else throw ConfigError("unknown command '" + std::string(name) + "'");
    return 0;
  } catch (const std::exception& e) {
    err << "rf " << name << ": error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace rf
