#ifndef NHQC_CONFIG_HPP
#define NHQC_CONFIG_HPP

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "nhqc/types.hpp"

namespace nhqc {

/// Flat key=value configuration text. '#' starts a comment, blank lines are
/// skipped, keys may be dotted (axis1.param). Duplicate keys are rejected.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig parse(const std::string& text) {
    KeyValueConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      std::string s = trim(line);
      if (s.empty()) continue;
      auto eq = s.find('=');
      if (eq == std::string::npos)
        throw PlanError("config line " + std::to_string(lineno) +
                        ": expected key = value, got '" + s + "'");
      std::string key = trim(s.substr(0, eq));
      std::string value = trim(s.substr(eq + 1));
      if (key.empty())
        throw PlanError("config line " + std::to_string(lineno) + ": empty key");
      if (cfg.values_.count(key))
        throw PlanError("duplicate config key '" + key + "'");
      cfg.values_[key] = value;
      cfg.order_.push_back(key);
    }
    return cfg;
  }

  static KeyValueConfig parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw PlanError("missing config key '" + key + "'");
    used_.insert(key);
    return it->second;
  }

  std::string get_or(const std::string& key, const std::string& dflt) const {
    return has(key) ? get(key) : dflt;
  }

  double get_double(const std::string& key) const {
    const std::string v = get(key);
    char* end = nullptr;
    double x = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0')
      throw PlanError("config key '" + key + "': '" + v + "' is not a number");
    return x;
  }

  double get_double_or(const std::string& key, double dflt) const {
    return has(key) ? get_double(key) : dflt;
  }

  long get_long(const std::string& key) const {
    const std::string v = get(key);
    char* end = nullptr;
    long x = std::strtol(v.c_str(), &end, 10);
    if (end == v.c_str() || *end != '\0')
      throw PlanError("config key '" + key + "': '" + v + "' is not an integer");
    return x;
  }

  long get_long_or(const std::string& key, long dflt) const {
    return has(key) ? get_long(key) : dflt;
  }

  void set(const std::string& key, const std::string& value) {
    if (!values_.count(key)) order_.push_back(key);
    values_[key] = value;
  }

  /// Keys present in the text but never read; callers reject these by name.
  std::vector<std::string> unused_keys() const {
    std::vector<std::string> out;
    for (const auto& k : order_)
      if (!used_.count(k)) out.push_back(k);
    return out;
  }

  void reject_unused(const std::string& context) const {
    auto u = unused_keys();
    if (!u.empty()) throw PlanError("unknown " + context + " key '" + u.front() + "'");
  }

  const std::vector<std::string>& keys() const { return order_; }

  std::string to_text() const {
    std::ostringstream out;
    for (const auto& k : order_) out << k << " = " << values_.at(k) << "\n";
    return out.str();
  }

  static std::string trim(const std::string& s) {
    size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
  }

 private:
  std::map<std::string, std::string> values_;
  std::vector<std::string> order_;
  mutable std::set<std::string> used_;
};

/// Round-trip safe double formatting (17 significant digits).
inline std::string format_double_exact(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

/// Compact formatting for data files (12 significant digits).
inline std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", x);
  return buf;
}

}  // namespace nhqc

#endif  // NHQC_CONFIG_HPP
