#pragma once

#include <map>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "romgait/biped_env.hpp"
#include "romgait/gail.hpp"
#include "romgait/ppo.hpp"
#include "romgait/rom_env.hpp"
#include "romgait/sac.hpp"

namespace romgait {

// Flat `key = value` configuration (a TOML-compatible subset: no tables,
// `#` comments, bare or quoted values). Unknown keys are rejected with the
// offending key named.
class ConfigMap {
 public:
  static ConfigMap from_file(const std::string& path);
  ConfigMap() = default;

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  bool has(const std::string& key) const { return values_.count(key) > 0; }

  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;

  // Throws ConfigError naming the first key that is not documented.
  void reject_unknown_keys() const;

  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

struct KeyDoc {
  std::string key;
  std::string default_value;
  std::string description;
};

const std::vector<KeyDoc>& config_reference();
void print_config_defaults(std::ostream& os);

RomParams rom_params_from_config(const ConfigMap& cfg);
EpisodeConfig episode_from_config(const ConfigMap& cfg);
BipedParams biped_params_from_config(const ConfigMap& cfg);
BipedEpisodeConfig biped_episode_from_config(const ConfigMap& cfg);
PpoConfig ppo_from_config(const ConfigMap& cfg);
SacConfig sac_from_config(const ConfigMap& cfg);
DiscriminatorConfig disc_from_config(const ConfigMap& cfg);
BlendConfig blend_from_config(const ConfigMap& cfg);

}  // namespace romgait
