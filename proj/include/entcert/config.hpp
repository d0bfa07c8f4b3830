#pragma once

#include <map>
#include <string>
#include <variant>
#include <vector>

namespace entcert {

/// Value of one config key: scalar, string, or homogeneous array.
using ConfigValue = std::variant<bool, double, std::string,
                                 std::vector<double>, std::vector<std::string>>;

/// Flat key-value view of a config file. Keys are dotted section paths
/// ("ensemble.eta"). The text format is a TOML-like subset: [section]
/// headers, key = value lines, '#' comments, arrays in brackets.
class ConfigMap {
 public:
  static ConfigMap parse(const std::string& text);
  static ConfigMap load(const std::string& path);
  std::string serialize() const;

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  void set(const std::string& key, ConfigValue v) { values_[key] = std::move(v); }

  double get_number(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::string get_string(const std::string& key,
                         const std::string& fallback) const;
  std::vector<double> get_numbers(const std::string& key) const;
  std::vector<std::string> get_strings(const std::string& key) const;

  const std::map<std::string, ConfigValue>& values() const { return values_; }
  bool operator==(const ConfigMap& other) const {
    return values_ == other.values_;
  }

 private:
  std::map<std::string, ConfigValue> values_;
};

}  // namespace entcert
