#include "nhse/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "nhse/error.hpp"
#include "nhse/table.hpp"

namespace nhse {

namespace {

bool same_type(const ConfigValue& v, ValueType t) {
  switch (t) {
    case ValueType::Bool: return std::holds_alternative<bool>(v);
    case ValueType::Int: return std::holds_alternative<long long>(v);
    case ValueType::Real: return std::holds_alternative<double>(v);
    case ValueType::Text: return std::holds_alternative<std::string>(v);
    case ValueType::RealList: return std::holds_alternative<std::vector<double>>(v);
    case ValueType::IntList: return std::holds_alternative<std::vector<long long>>(v);
  }
  return false;
}

double scalar_real(const YAML::Node& node, const std::string& key) {
  try {
    return node.as<double>();
  } catch (const YAML::Exception&) {
    throw InvalidArgument("'" + key + "' expects a number, got '" + node.Scalar() + "'");
  }
}

long long scalar_int(const YAML::Node& node, const std::string& key) {
  const double d = scalar_real(node, key);
  if (std::abs(d - std::round(d)) > 0.0 || std::abs(d) > 9e15) {
    throw InvalidArgument("'" + key + "' expects an integer, got '" + node.Scalar() + "'");
  }
  return static_cast<long long>(std::llround(d));
}

template <typename T, typename F>
std::vector<T> list_of(const YAML::Node& node, F&& convert) {
  std::vector<T> out;
  if (node.IsSequence()) {
    for (const auto& item : node) out.push_back(convert(item));
  } else {
    out.push_back(convert(node));
  }
  return out;
}

ConfigValue convert_node(const YAML::Node& node, const ConfigEntry& e) {
  if (!node.IsDefined() || node.IsNull()) {
    if (e.type == ValueType::RealList) return std::vector<double>{};
    if (e.type == ValueType::IntList) return std::vector<long long>{};
    throw InvalidArgument("'" + e.key + "' needs a value");
  }
  if (node.IsMap()) throw InvalidArgument("'" + e.key + "' cannot be a mapping");
  if (node.IsSequence() && e.type != ValueType::RealList && e.type != ValueType::IntList) {
    throw InvalidArgument("'" + e.key + "' expects a single " + to_string(e.type) + " value");
  }
  switch (e.type) {
    case ValueType::Bool:
      try {
        return node.as<bool>();
      } catch (const YAML::Exception&) {
        throw InvalidArgument("'" + e.key + "' expects true or false, got '" + node.Scalar() + "'");
      }
    case ValueType::Int: return scalar_int(node, e.key);
    case ValueType::Real: return scalar_real(node, e.key);
    case ValueType::Text: return node.as<std::string>();
    case ValueType::RealList:
      return list_of<double>(node, [&](const YAML::Node& n) { return scalar_real(n, e.key); });
    case ValueType::IntList:
      return list_of<long long>(node, [&](const YAML::Node& n) { return scalar_int(n, e.key); });
  }
  throw InvalidArgument("unsupported value type for '" + e.key + "'");
}

}  // namespace

const std::vector<std::string>& config_sections() {
  static const std::vector<std::string> sections{"model",    "geometry", "boundary",
                                                 "dynamics", "output",   "analysis"};
  return sections;
}

std::string to_string(ValueType type) {
  switch (type) {
    case ValueType::Bool: return "bool";
    case ValueType::Int: return "int";
    case ValueType::Real: return "real";
    case ValueType::Text: return "text";
    case ValueType::RealList: return "real list";
    case ValueType::IntList: return "int list";
  }
  return "?";
}

std::string to_string(Provenance p) { return p == Provenance::Paper ? "paper" : "chosen"; }

std::string format_value(const ConfigValue& value) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, bool>) {
          return v ? "true" : "false";
        } else if constexpr (std::is_same_v<T, long long>) {
          return std::to_string(v);
        } else if constexpr (std::is_same_v<T, double>) {
          return format_number(v);
        } else if constexpr (std::is_same_v<T, std::string>) {
          return v;
        } else {
          std::string out = "[";
          for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) out += ", ";
            if constexpr (std::is_same_v<T, std::vector<double>>) {
              out += format_number(v[i]);
            } else {
              out += std::to_string(v[i]);
            }
          }
          return out + "]";
        }
      },
      value);
}

nlohmann::ordered_json value_to_json(const ConfigValue& value) {
  return std::visit([](const auto& v) { return nlohmann::ordered_json(v); }, value);
}

ExperimentConfig::ExperimentConfig(std::string id, ConfigSchema schema)
    : id_(std::move(id)), schema_(std::move(schema)) {
  for (const auto& e : schema_) {
    if (!same_type(e.default_value, e.type)) {
      throw std::logic_error("schema default for '" + e.key + "' has the wrong type");
    }
    const auto dot = e.key.find('.');
    const std::string section = e.key.substr(0, dot);
    if (dot == std::string::npos ||
        std::find(config_sections().begin(), config_sections().end(), section) ==
            config_sections().end()) {
      throw std::logic_error("schema key '" + e.key + "' is not in a known section");
    }
    values_[e.key] = e.default_value;
    overridden_[e.key] = false;
  }
}

const ConfigEntry& ExperimentConfig::entry(const std::string& key) const {
  for (const auto& e : schema_) {
    if (e.key == key) return e;
  }
  throw InvalidArgument("unknown config key '" + key + "' for experiment " + id_);
}

bool ExperimentConfig::has(const std::string& key) const { return values_.contains(key); }

bool ExperimentConfig::overridden(const std::string& key) const {
  entry(key);
  return overridden_.at(key);
}

void ExperimentConfig::set(const std::string& key, const ConfigValue& value) {
  const ConfigEntry& e = entry(key);
  if (!same_type(value, e.type)) {
    throw InvalidArgument("'" + key + "' expects a " + to_string(e.type) + " value");
  }
  values_[key] = value;
  overridden_[key] = true;
}

void ExperimentConfig::load_yaml_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot read config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  load_yaml_text(buf.str());
}

void ExperimentConfig::load_yaml_text(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& ex) {
    throw InvalidArgument(std::string("malformed config document: ") + ex.what());
  }
  if (root.IsNull()) return;
  if (!root.IsMap()) throw InvalidArgument("config document must be a mapping of sections");
  for (const auto& section : root) {
    const auto name = section.first.as<std::string>();
    if (name == "experiment") {
      const auto id = section.second.as<std::string>();
      if (id != id_) {
        throw InvalidArgument("config is for experiment '" + id + "', not '" + id_ + "'");
      }
      continue;
    }
    if (std::find(config_sections().begin(), config_sections().end(), name) ==
        config_sections().end()) {
      throw InvalidArgument("unknown config section '" + name + "'");
    }
    if (section.second.IsNull()) continue;
    if (!section.second.IsMap()) throw InvalidArgument("section '" + name + "' must be a mapping");
    for (const auto& item : section.second) {
      const std::string key = name + "." + item.first.as<std::string>();
      set(key, convert_node(item.second, entry(key)));
    }
  }
}

void ExperimentConfig::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw InvalidArgument("override '" + assignment + "' is not of the form section.key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  const ConfigEntry& e = entry(key);
  if (e.type == ValueType::Text) {
    set(key, text);
    return;
  }
  YAML::Node node;
  try {
    node = YAML::Load(text);
  } catch (const YAML::Exception& ex) {
    throw InvalidArgument("cannot parse value for '" + key + "': " + ex.what());
  }
  set(key, convert_node(node, e));
}

const ConfigValue& ExperimentConfig::value(const std::string& key, ValueType expected) const {
  const ConfigEntry& e = entry(key);
  if (e.type != expected) {
    throw std::logic_error("config key '" + key + "' read as " + to_string(expected) + " but is " +
                           to_string(e.type));
  }
  return values_.at(key);
}

bool ExperimentConfig::flag(const std::string& key) const {
  return std::get<bool>(value(key, ValueType::Bool));
}
long long ExperimentConfig::integer(const std::string& key) const {
  return std::get<long long>(value(key, ValueType::Int));
}
double ExperimentConfig::real(const std::string& key) const {
  return std::get<double>(value(key, ValueType::Real));
}
const std::string& ExperimentConfig::text(const std::string& key) const {
  return std::get<std::string>(value(key, ValueType::Text));
}
const std::vector<double>& ExperimentConfig::reals(const std::string& key) const {
  return std::get<std::vector<double>>(value(key, ValueType::RealList));
}
const std::vector<long long>& ExperimentConfig::integers(const std::string& key) const {
  return std::get<std::vector<long long>>(value(key, ValueType::IntList));
}

nlohmann::ordered_json ExperimentConfig::to_json() const {
  nlohmann::ordered_json params = nlohmann::ordered_json::object();
  for (const auto& e : schema_) {
    params[e.key] = {{"value", value_to_json(values_.at(e.key))},
                     {"unit", e.unit},
                     {"source", to_string(e.provenance)},
                     {"overridden", overridden_.at(e.key)}};
  }
  return {{"experiment", id_}, {"parameters", params}};
}

}  // namespace nhse
