#include "fsmap/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace fsmap {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

RawConfig parse_config_text(const std::string& text) {
  RawConfig out;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    for (auto& v : split_list(line.substr(eq + 1))) out[key].push_back(v);
  }
  return out;
}

RawConfig parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

ResolvedConfig::ResolvedConfig(const std::vector<ConfigKey>& keys, const RawConfig& file_values,
                               const RawConfig& flag_values) {
  std::map<std::string, const ConfigKey*> known;
  for (const auto& k : keys) {
    known[k.name] = &k;
    order_.push_back(k.name);
    values_[k.name] = split_list(k.default_value);
  }
  for (const RawConfig* layer : {&file_values, &flag_values}) {
    for (const auto& [key, vals] : *layer) {
      const auto it = known.find(key);
      if (it == known.end()) throw ConfigError("unknown config key '" + key + "'");
      std::vector<std::string> expanded;
      for (const auto& v : vals)
        for (auto& item : split_list(v)) expanded.push_back(item);
      if (expanded.empty()) throw ConfigError("config key '" + key + "' has no value");
      if (!it->second->multi && expanded.size() > 1)
        throw ConfigError("config key '" + key + "' takes a single value");
      values_[key] = expanded;
    }
  }
}

const std::vector<std::string>& ResolvedConfig::values(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  return it->second;
}

std::string ResolvedConfig::get(const std::string& key) const {
  const auto& v = values(key);
  if (v.size() != 1) throw ConfigError("config key '" + key + "' needs exactly one value");
  return v.front();
}

double parse_double(const std::string& key, const std::string& text) {
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size() || !std::isfinite(v))
    throw ConfigError("invalid number '" + text + "' for " + key);
  return v;
}

long parse_long(const std::string& key, const std::string& text) {
  long v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw ConfigError("invalid integer '" + text + "' for " + key);
  return v;
}

double ResolvedConfig::get_double(const std::string& key) const { return parse_double(key, get(key)); }
long ResolvedConfig::get_long(const std::string& key) const { return parse_long(key, get(key)); }

std::uint64_t ResolvedConfig::get_u64(const std::string& key) const {
  const std::string s = get(key);
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ConfigError("invalid unsigned integer '" + s + "' for " + key);
  return v;
}

std::vector<double> ResolvedConfig::get_doubles(const std::string& key) const {
  std::vector<double> out;
  for (const auto& v : values(key)) out.push_back(parse_double(key, v));
  return out;
}

std::vector<long> ResolvedConfig::get_longs(const std::string& key) const {
  std::vector<long> out;
  for (const auto& v : values(key)) out.push_back(parse_long(key, v));
  return out;
}

std::string ResolvedConfig::resolved_text() const {
  std::string s;
  for (const auto& key : order_) {
    s += key + " = ";
    const auto& v = values_.at(key);
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + v[i];
    s += '\n';
  }
  return s;
}

}  // namespace fsmap
