#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "graphssl/common.hpp"

namespace graphssl {

// `key = value` lines; `#` starts a comment, blank lines are skipped.
// Values are kept as raw strings; array values use JSON syntax, e.g.
// `mean = [0, 1.5]` or `cov = [[1, 0], [0, 1]]`.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;
  static KeyValueConfig parse(std::istream& in, const std::string& source = "<config>");
  static KeyValueConfig load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::string& raw(const std::string& key) const;
  std::optional<std::string> get(const std::string& key) const;

  double number(const std::string& key) const;
  double number(const std::string& key, double fallback) const;
  Index integer(const std::string& key) const;
  Index integer(const std::string& key, Index fallback) const;
  nlohmann::json json(const std::string& key) const;
  std::vector<double> numbers(const std::string& key) const;

  const std::map<std::string, std::string>& entries() const { return values_; }
  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  const std::string& source() const { return source_; }

 private:
  std::map<std::string, std::string> values_;
  std::string source_;
};

}  // namespace graphssl
