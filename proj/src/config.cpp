#include "graphssl/config.hpp"

#include <istream>

#include <fmt/format.h>

#include "graphssl/io.hpp"

namespace graphssl {

KeyValueConfig KeyValueConfig::parse(std::istream& in, const std::string& source) {
  KeyValueConfig cfg;
  cfg.source_ = source;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    const std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw InputError(fmt::format("{}:{}: expected 'key = value'", source, number));
    const std::string key = trim(body.substr(0, eq));
    if (key.empty()) throw InputError(fmt::format("{}:{}: empty key", source, number));
    if (cfg.values_.count(key)) throw InputError(fmt::format("{}:{}: duplicate key '{}'", source, number, key));
    cfg.values_[key] = trim(body.substr(eq + 1));
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse(in, path.string());
}

const std::string& KeyValueConfig::raw(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw InputError(fmt::format("{}: missing key '{}'", source_, key));
  return it->second;
}

std::optional<std::string> KeyValueConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

double KeyValueConfig::number(const std::string& key) const {
  return parse_double(raw(key), fmt::format("{}: key '{}'", source_, key));
}

double KeyValueConfig::number(const std::string& key, double fallback) const {
  return has(key) ? number(key) : fallback;
}

Index KeyValueConfig::integer(const std::string& key) const {
  return static_cast<Index>(parse_int(raw(key), fmt::format("{}: key '{}'", source_, key)));
}

Index KeyValueConfig::integer(const std::string& key, Index fallback) const {
  return has(key) ? integer(key) : fallback;
}

nlohmann::json KeyValueConfig::json(const std::string& key) const {
  try {
    return nlohmann::json::parse(raw(key));
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(fmt::format("{}: key '{}': {}", source_, key, e.what()));
  }
}

std::vector<double> KeyValueConfig::numbers(const std::string& key) const {
  const auto j = json(key);
  if (!j.is_array()) throw InputError(fmt::format("{}: key '{}' must be an array", source_, key));
  std::vector<double> out;
  for (const auto& v : j) {
    if (!v.is_number()) throw InputError(fmt::format("{}: key '{}' must hold numbers", source_, key));
    out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace graphssl
