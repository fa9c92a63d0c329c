#pragma once

// Sectioned key-value configuration:
//
//   # comment
//   [section]
//   key = value
//
// Keys are addressed as "section.key"; command-line overrides use the same
// dotted form ("train.epochs=100"). Every key read is marked so that unknown
// (misspelt) keys can be reported.

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace fvpinn {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Config {
 public:
  static Config parse(const std::string& text, const std::string& source = "config");
  static Config load(const std::string& path);

  /// "section.key=value"
  void apply_override(const std::string& assignment);
  void set(const std::string& key, const std::string& value);

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  long get_int(const std::string& key) const;
  long get_int(const std::string& key, long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_doubles(const std::string& key, std::vector<double> fallback) const;
  /// Relative paths resolve against the config file's directory.
  std::string get_path(const std::string& key) const;
  std::optional<std::string> get_optional_path(const std::string& key) const;

  /// Keys in `section` (without the prefix), in sorted order.
  std::vector<std::string> keys_in(const std::string& section) const;
  std::vector<std::string> unused_keys() const;

  const std::string& base_dir() const noexcept { return base_dir_; }
  void set_base_dir(std::string dir) { base_dir_ = std::move(dir); }

 private:
  const std::string& raw(const std::string& key) const;

  std::map<std::string, std::string> values_;
  mutable std::set<std::string> used_;
  std::string source_ = "config";
  std::string base_dir_ = ".";
};

}  // namespace fvpinn
