#pragma once

#include <map>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

namespace nhse {

enum class ValueType { Bool, Int, Real, Text, RealList, IntList };

using ConfigValue =
    std::variant<bool, long long, double, std::string, std::vector<double>, std::vector<long long>>;

/// Where a default comes from: a value quoted in the source figures, or our choice.
enum class Provenance { Paper, Chosen };

struct ConfigEntry {
  std::string key;  ///< "section.name"
  ValueType type;
  ConfigValue default_value;
  std::string unit;
  Provenance provenance;
  std::string description;
};

using ConfigSchema = std::vector<ConfigEntry>;

/// Allowed top-level sections of a config document.
const std::vector<std::string>& config_sections();

/// Resolved experiment configuration: schema defaults, then the config file, then
/// dotted-key overrides.
class ExperimentConfig {
 public:
  ExperimentConfig(std::string id, ConfigSchema schema);

  const std::string& id() const { return id_; }
  const ConfigSchema& schema() const { return schema_; }

  /// Loads a YAML document. Unknown sections or keys are errors.
  void load_yaml_file(const std::string& path);
  void load_yaml_text(const std::string& text);
  /// "section.name=value"; value uses YAML scalar / flow-sequence syntax.
  void apply_override(const std::string& assignment);
  void set(const std::string& key, const ConfigValue& value);

  bool has(const std::string& key) const;
  bool overridden(const std::string& key) const;

  bool flag(const std::string& key) const;
  long long integer(const std::string& key) const;
  double real(const std::string& key) const;
  const std::string& text(const std::string& key) const;
  const std::vector<double>& reals(const std::string& key) const;
  const std::vector<long long>& integers(const std::string& key) const;

  /// {"experiment": id, "parameters": {key: {value, unit, source, overridden}}}
  nlohmann::ordered_json to_json() const;

 private:
  const ConfigEntry& entry(const std::string& key) const;
  const ConfigValue& value(const std::string& key, ValueType expected) const;

  std::string id_;
  ConfigSchema schema_;
  std::map<std::string, ConfigValue> values_;
  std::map<std::string, bool> overridden_;
};

std::string to_string(ValueType type);
std::string to_string(Provenance p);
std::string format_value(const ConfigValue& value);
nlohmann::ordered_json value_to_json(const ConfigValue& value);

}  // namespace nhse
