#include "entcert/config.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace entcert {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::string strip_comment(const std::string& line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') in_string = !in_string;
    if (line[i] == '#' && !in_string) return line.substr(0, i);
  }
  return line;
}

bool parse_number(const std::string& text, double& out) {
  char* end = nullptr;
  out = std::strtod(text.c_str(), &end);
  return end != nullptr && *end == '\0' && !text.empty();
}

ConfigValue parse_scalar(const std::string& text, const std::string& key) {
  if (text.size() >= 2 && text.front() == '"' && text.back() == '"')
    return text.substr(1, text.size() - 2);
  if (text == "true") return true;
  if (text == "false") return false;
  if (text == "inf") return std::numeric_limits<double>::infinity();
  double num;
  if (parse_number(text, num)) return num;
  throw std::invalid_argument("config: cannot parse value for '" + key +
                              "': " + text);
}

std::vector<std::string> split_array(const std::string& inner) {
  std::vector<std::string> items;
  std::string cur;
  bool in_string = false;
  for (char c : inner) {
    if (c == '"') in_string = !in_string;
    if (c == ',' && !in_string) {
      items.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!trim(cur).empty()) items.push_back(trim(cur));
  return items;
}

std::string format_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

ConfigMap ConfigMap::parse(const std::string& text) {
  ConfigMap map;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(strip_comment(line));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::invalid_argument("config line " + std::to_string(lineno) +
                                    ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (!section.empty()) key = section + "." + key;
    if (value.empty())
      throw std::invalid_argument("config: empty value for '" + key + "'");
    if (value.front() == '[') {
      if (value.back() != ']')
        throw std::invalid_argument("config: unterminated array for '" + key +
                                    "'");
      auto items = split_array(value.substr(1, value.size() - 2));
      bool all_numbers = !items.empty();
      std::vector<double> nums;
      for (const auto& item : items) {
        double num;
        if (parse_number(item, num)) {
          nums.push_back(num);
        } else {
          all_numbers = false;
          break;
        }
      }
      if (all_numbers) {
        map.set(key, nums);
      } else {
        std::vector<std::string> strs;
        for (const auto& item : items) {
          if (item.size() >= 2 && item.front() == '"' && item.back() == '"')
            strs.push_back(item.substr(1, item.size() - 2));
          else
            strs.push_back(item);
        }
        map.set(key, strs);
      }
    } else {
      map.set(key, parse_scalar(value, key));
    }
  }
  return map;
}

ConfigMap ConfigMap::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

std::string ConfigMap::serialize() const {
  // Group keys by section; top-level keys first.
  std::map<std::string, std::map<std::string, const ConfigValue*>> sections;
  for (const auto& [key, value] : values_) {
    std::size_t dot = key.find('.');
    if (dot == std::string::npos)
      sections[""][key] = &value;
    else
      sections[key.substr(0, dot)][key.substr(dot + 1)] = &value;
  }
  std::ostringstream out;
  auto emit = [&](const std::string& key, const ConfigValue& v) {
    out << key << " = ";
    if (std::holds_alternative<bool>(v)) {
      out << (std::get<bool>(v) ? "true" : "false");
    } else if (std::holds_alternative<double>(v)) {
      out << format_number(std::get<double>(v));
    } else if (std::holds_alternative<std::string>(v)) {
      out << '"' << std::get<std::string>(v) << '"';
    } else if (std::holds_alternative<std::vector<double>>(v)) {
      out << '[';
      const auto& arr = std::get<std::vector<double>>(v);
      for (std::size_t i = 0; i < arr.size(); ++i)
        out << (i ? ", " : "") << format_number(arr[i]);
      out << ']';
    } else {
      out << '[';
      const auto& arr = std::get<std::vector<std::string>>(v);
      for (std::size_t i = 0; i < arr.size(); ++i)
        out << (i ? ", " : "") << '"' << arr[i] << '"';
      out << ']';
    }
    out << "\n";
  };
  for (const auto& [name, keys] : sections) {
    if (name.empty()) {
      for (const auto& [key, value] : keys) emit(key, *value);
    }
  }
  for (const auto& [name, keys] : sections) {
    if (name.empty()) continue;
    out << "\n[" << name << "]\n";
    for (const auto& [key, value] : keys) emit(key, *value);
  }
  return out.str();
}

double ConfigMap::get_number(const std::string& key, double fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (const double* v = std::get_if<double>(&it->second)) return *v;
  throw std::invalid_argument("config: '" + key + "' is not a number");
}

bool ConfigMap::get_bool(const std::string& key, bool fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (const bool* v = std::get_if<bool>(&it->second)) return *v;
  throw std::invalid_argument("config: '" + key + "' is not a bool");
}

std::string ConfigMap::get_string(const std::string& key,
                                  const std::string& fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (const std::string* v = std::get_if<std::string>(&it->second)) return *v;
  throw std::invalid_argument("config: '" + key + "' is not a string");
}

std::vector<double> ConfigMap::get_numbers(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return {};
  if (const auto* v = std::get_if<std::vector<double>>(&it->second)) return *v;
  if (const double* v = std::get_if<double>(&it->second)) return {*v};
  throw std::invalid_argument("config: '" + key + "' is not a number array");
}

std::vector<std::string> ConfigMap::get_strings(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return {};
  if (const auto* v = std::get_if<std::vector<std::string>>(&it->second))
    return *v;
  if (const std::string* v = std::get_if<std::string>(&it->second))
    return {*v};
  throw std::invalid_argument("config: '" + key + "' is not a string array");
}

}  // namespace entcert
