#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "dorsiflex/error.hpp"
#include "dorsiflex/text.hpp"

namespace dorsiflex {

/// Flat key = value run configuration with '#' comments. Flags override
/// file values through set(); render() echoes the resolved configuration
/// for provenance.
class Config {
 public:
  Config() = default;

  static Config from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config: " + path);
    Config cfg;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const std::string_view text = trim(line);
      if (text.empty() || text.front() == '#') continue;
      const std::size_t eq = text.find('=');
      if (eq == std::string_view::npos) {
        throw ParseError(path + ":" + std::to_string(line_no) +
                         ": expected 'key = value'");
      }
      const std::string key{trim(text.substr(0, eq))};
      if (key.empty()) {
        throw ParseError(path + ":" + std::to_string(line_no) + ": empty key");
      }
      cfg.values_[key] = std::string(trim(text.substr(eq + 1)));
    }
    return cfg;
  }

  void set(const std::string& key, const std::string& value) {
    values_[key] = value;
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string str(const std::string& key, const std::string& fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  std::string require(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ParamError("missing config key: " + key);
    return it->second;
  }

  long long integer(const std::string& key, long long fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback
                               : parse_int(it->second, "config key " + key);
  }

  double number(const std::string& key, double fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback
                               : parse_double(it->second, "config key " + key);
  }

  std::uint64_t seed(const std::string& key, std::uint64_t fallback) const {
    return static_cast<std::uint64_t>(
        integer(key, static_cast<long long>(fallback)));
  }

  bool boolean(const std::string& key, bool fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (it->second == "true") return true;
    if (it->second == "false") return false;
    throw ParamError("config key " + key + " must be true or false");
  }

  /// Comma-separated list; empty value means empty list.
  std::vector<std::string> list(const std::string& key) const {
    std::vector<std::string> out;
    const auto it = values_.find(key);
    if (it == values_.end() || trim(it->second).empty()) return out;
    for (std::string_view part : split(it->second, ',')) {
      out.emplace_back(trim(part));
    }
    return out;
  }

  std::string render() const {
    std::ostringstream out;
    for (const auto& [key, value] : values_) {
      out << key << " = " << value << '\n';
    }
    return out.str();
  }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace dorsiflex
