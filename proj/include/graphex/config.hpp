#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "graphex/simulator.hpp"

namespace graphex {

// Everything a CLI run can configure.
struct RunSettings {
  ExperimentConfig experiment;
  // Input graph for train-embeddings.
  std::filesystem::path graph_snapshot;
};

// A bad key or value. key() names the offending setting.
class ConfigError : public InvalidArgument {
 public:
  ConfigError(std::string key, const std::string& what)
      : InvalidArgument(key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

struct ConfigEntry {
  std::string key;
  std::string value;
  std::size_t line = 0;
};

// "key = value" lines; '#' starts a comment; blank lines ignored.
std::vector<ConfigEntry> parse_config(std::istream& in);
std::vector<ConfigEntry> read_config_file(const std::filesystem::path& path);

// Parses "KEY=VALUE" (as given to --override).
ConfigEntry parse_override(const std::string& text);

// Throws ConfigError for unknown keys or unparsable values.
void apply_setting(RunSettings& settings, const std::string& key,
                   const std::string& value);

// Environment variable consulted for `key`: GRAPHEX_ + upper-cased key with
// '.' replaced by "__" (e.g. train.epochs -> GRAPHEX_TRAIN__EPOCHS).
std::string env_var_name(const std::string& key);
void apply_environment(RunSettings& settings);

// Every known key with its effective value, in a stable order.
std::vector<std::pair<std::string, std::string>> effective_settings(
    const RunSettings& settings);

}  // namespace graphex
