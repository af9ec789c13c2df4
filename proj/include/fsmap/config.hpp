#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace fsmap {

// Invalid configuration or command-line usage.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ConfigKey {
  std::string name;  // kebab-case, identical to the flag name without "--"
  std::string default_value;
  std::string help;
  bool multi = false;  // accepts several values (repeated flag or comma list)
};

using RawConfig = std::map<std::string, std::vector<std::string>>;

// Parses line-oriented `key = value` text; '#' starts a comment.
RawConfig parse_config_text(const std::string& text);
RawConfig parse_config_file(const std::filesystem::path& path);

class ResolvedConfig {
 public:
  ResolvedConfig(const std::vector<ConfigKey>& keys, const RawConfig& file_values, const RawConfig& flag_values);

  const std::vector<std::string>& values(const std::string& key) const;
  std::string get(const std::string& key) const;
  double get_double(const std::string& key) const;
  long get_long(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  std::vector<double> get_doubles(const std::string& key) const;
  std::vector<long> get_longs(const std::string& key) const;

  // One `key = value` line per key in declaration order.
  std::string resolved_text() const;

 private:
  std::vector<std::string> order_;
  std::map<std::string, std::vector<std::string>> values_;
};

double parse_double(const std::string& key, const std::string& text);
long parse_long(const std::string& key, const std::string& text);

}  // namespace fsmap
