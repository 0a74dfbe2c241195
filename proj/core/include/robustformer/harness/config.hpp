#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "robustformer/model.hpp"

namespace rf {

/// Flat `key = value` settings with dotted section prefixes. Only keys from
/// the built-in registry are accepted; every key has a default, so a run is
/// fully described by the resolved text.
class RunConfig {
 public:
  RunConfig();

  /// Parses `key = value` lines; '#' starts a comment. Throws ConfigError for
  /// unknown keys or malformed lines.
  static RunConfig parse(std::string_view text);
  static RunConfig load(const std::filesystem::path& path);

  /// Applies one `key=value` override.
  void set(std::string_view assignment);
  void set(const std::string& key, const std::string& value);

  const std::string& get(const std::string& key) const;
  std::string get_string(const std::string& key) const { return get(key); }
  long long get_int(const std::string& key) const;
  std::size_t get_size(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::uint64_t seed() const;
  /// Comma-separated list; empty value gives an empty list.
  std::vector<std::string> get_list(const std::string& key) const;

  /// Every key in sorted order, one `key = value` line each.
  std::string resolved_text() const;

  static const std::map<std::string, std::string>& defaults();

 private:
  std::map<std::string, std::string> values_;
};

ModelConfig model_config_from(const RunConfig& cfg);

}  // namespace rf
