#include "robustformer/harness/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace rf {

namespace {

std::string trim(std::string_view s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string_view::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return std::string(s.substr(begin, end - begin + 1));
}

}  // namespace

const std::map<std::string, std::string>& RunConfig::defaults() {
  static const std::map<std::string, std::string> d = {
      {"seed", "0"},
      {"output.dir", "rf-out"},

      {"data.kind", "idx-images"},
      {"data.train_images", ""},
      {"data.train_labels", ""},
      {"data.test_images", ""},
      {"data.test_labels", ""},
      {"data.train_dir", ""},
      {"data.test_dir", ""},
      {"data.limit_train", "0"},
      {"data.limit_test", "0"},

      {"model.variant", "RF-O"},
      {"model.patch", "2"},
      {"model.tubelet", "2"},
      {"model.embed_dim", "32"},
      {"model.encoder_depth", "2"},
      {"model.encoder_heads", "2"},
      {"model.decoder_depth", "4"},
      {"model.decoder_heads", "1"},
      {"model.decoder_dim", "0"},
      {"model.norm_pix", "true"},
      {"model.mask_ratio", "0.75"},
      {"model.num_classes", "10"},
      {"model.filter", "haar"},
      {"model.boundary", "zero"},
      {"model.attention_filter", "haar"},
      {"model.scale_mode", "paper"},

      {"optim.weight_decay", "0.05"},
      {"optim.warmup_fraction", "0.05"},
      {"optim.beta1", "0.9"},
      {"optim.beta2", "0.999"},

      {"pretrain.epochs", "1"},
      {"pretrain.batch_size", "64"},
      {"pretrain.lr", "1.5e-4"},

      {"finetune.epochs", "1"},
      {"finetune.batch_size", "64"},
      {"finetune.lr", "1e-3"},
      {"finetune.init", ""},

      {"evaluate.checkpoint", ""},
      {"evaluate.corruptions", ""},
      {"evaluate.severities", "1,2,3,4,5"},
      {"evaluate.sequences", ""},
      {"evaluate.sequence_length", "11"},
      {"evaluate.sequence_severity", "3"},
      {"evaluate.sequence_samples", "0"},
      {"evaluate.batch_size", "64"},

      {"corrupt.kinds", "gaussian"},
      {"corrupt.severities", "1,2,3,4,5"},

      {"metrics.predictions", ""},
      {"metrics.baseline", ""},
      {"metrics.corruptions", ""},
      {"metrics.sequences", ""},
      {"metrics.clamp", "false"},

      {"dwt.input", ""},
      {"dwt.axes", ""},
      {"dwt.filter", "haar"},
      {"dwt.boundary", "zero"},
      {"dwt.inverse", "false"},

      {"synth.kind", "digits"},
      {"synth.train_count", "10000"},
      {"synth.test_count", "2000"},
      {"synth.frames", "8"},
      {"synth.size", "16"},
      {"synth.classes", "5"},
  };
  return d;
}

RunConfig::RunConfig() : values_(defaults()) {}

RunConfig RunConfig::parse(std::string_view text) {
  RunConfig cfg;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    const std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    cfg.set(trim(body.substr(0, eq)), trim(body.substr(eq + 1)));
  }
  return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void RunConfig::set(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) throw ConfigError("override '" + std::string(assignment) + "' is not key=value");
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (!defaults().count(key)) throw ConfigError("unknown config key '" + key + "'");
  values_[key] = value;
}

const std::string& RunConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  return it->second;
}

long long RunConfig::get_int(const std::string& key) const {
  const std::string& v = get(key);
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError("config key '" + key + "' expects an integer, got '" + v + "'");
  }
  return out;
}

std::size_t RunConfig::get_size(const std::string& key) const {
  const long long v = get_int(key);
  if (v < 0) throw ConfigError("config key '" + key + "' must be non-negative");
  return static_cast<std::size_t>(v);
}

double RunConfig::get_double(const std::string& key) const {
  const std::string& v = get(key);
  std::istringstream is(v);
  is.imbue(std::locale::classic());
  double out = 0;
  if (!(is >> out) || !is.eof()) throw ConfigError("config key '" + key + "' expects a number, got '" + v + "'");
  return out;
}

bool RunConfig::get_bool(const std::string& key) const {
  const std::string& v = get(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config key '" + key + "' expects true/false, got '" + v + "'");
}

std::uint64_t RunConfig::seed() const {
  const std::string& v = get("seed");
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) throw ConfigError("seed must be an unsigned integer");
  return out;
}

std::vector<std::string> RunConfig::get_list(const std::string& key) const {
  std::vector<std::string> out;
  const std::string& v = get(key);
  std::size_t start = 0;
  while (start <= v.size()) {
    const auto comma = v.find(',', start);
    const std::string item = trim(std::string_view(v).substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    if (!item.empty()) out.push_back(item);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string RunConfig::resolved_text() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
  return out;
}

ModelConfig model_config_from(const RunConfig& cfg) {
  ModelConfig m;
  m.variant = parse_model_variant(cfg.get("model.variant"));
  m.embed.patch = cfg.get_size("model.patch");
  m.embed.tubelet = cfg.get_size("model.tubelet");
  m.embed.embed_dim = cfg.get_size("model.embed_dim");
  m.embed.mask_ratio = cfg.get_double("model.mask_ratio");
  m.embed.filter = cfg.get("model.filter");
  m.embed.boundary = parse_boundary(cfg.get("model.boundary"));
  m.encoder_depth = cfg.get_size("model.encoder_depth");
  m.encoder_heads = cfg.get_size("model.encoder_heads");
  m.decoder_depth = cfg.get_size("model.decoder_depth");
  m.decoder_heads = cfg.get_size("model.decoder_heads");
  m.decoder_dim = cfg.get_size("model.decoder_dim");
  m.norm_pix = cfg.get_bool("model.norm_pix");
  m.num_classes = cfg.get_size("model.num_classes");
  m.attention_filter = cfg.get("model.attention_filter");
  m.scale_mode = parse_scale_mode(cfg.get("model.scale_mode"));
  m.validate();
  return m;
}

}  // namespace rf
