#pragma once

// JSON experiment configs. Unknown keys and ill-typed values are ConfigError.
//
//   {
//     "kernel": {"name": "helmholtz2d", "kappa": 1.0},
//     "orders": [2, 4, 6]            or {"min": 2, "max": 12, "step": 2},
//     "radii":  [0.01, 0.1]          or {"log2_min": -10, "log2_max": -2, "step": 1},
//     "kappas": [1, 10]              or {"min": 1, "max": 50, "count": 12},
//     "R": 0.01, "seed": 7, "grid": 50, "ops": ["M2L"], "output": "out.csv"
//   }

#include <fstream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "cfmm/experiments.hpp"

namespace cfmm {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <class C>
struct ConfigFile {
  C config;
  std::string output;  // empty: stdout
};

namespace detail {

using json = nlohmann::json;

inline void allow_keys(const json& j, const std::set<std::string>& keys, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, _] : j.items())
    if (!keys.contains(key)) throw ConfigError("unknown key '" + key + "' in " + where);
}

template <class V>
V get_as(const json& j, const std::string& key) {
  try {
    return j.at(key).get<V>();
  } catch (const json::exception&) {
    throw ConfigError("bad value for '" + key + "'");
  }
}

inline int positive_int(const json& j, const std::string& key) {
  if (!j.at(key).is_number_integer()) throw ConfigError("'" + key + "' must be an integer");
  const int v = get_as<int>(j, key);
  if (v < 1) throw ConfigError("'" + key + "' must be positive");
  return v;
}

inline KernelSpec parse_kernel(const json& j) {
  allow_keys(j, {"name", "kappa"}, "kernel");
  if (!j.contains("name")) throw ConfigError("kernel needs a name");
  KernelSpec k{get_as<std::string>(j, "name"), j.contains("kappa") ? get_as<double>(j, "kappa") : 0.0};
  try {
    k.make();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return k;
}

inline std::vector<int> parse_orders(const json& j) {
  std::vector<int> out;
  if (j.is_array()) {
    for (const auto& v : j) {
      if (!v.is_number_integer() || v.get<int>() < 0) throw ConfigError("orders must be non-negative integers");
      out.push_back(v.get<int>());
    }
  } else {
    allow_keys(j, {"min", "max", "step"}, "orders");
    const int lo = get_as<int>(j, "min"), hi = get_as<int>(j, "max");
    const int step = j.contains("step") ? get_as<int>(j, "step") : 1;
    if (lo < 0 || step < 1) throw ConfigError("bad orders range");
    for (int p = lo; p <= hi; p += step) out.push_back(p);
  }
  if (out.empty()) throw ConfigError("orders must not be empty");
  return out;
}

inline std::vector<double> parse_positive_list(const json& j, const std::string& what) {
  std::vector<double> out;
  for (const auto& v : j) {
    if (!v.is_number() || !(v.get<double>() > 0)) throw ConfigError(what + " must be positive numbers");
    out.push_back(v.get<double>());
  }
  if (out.empty()) throw ConfigError(what + " must not be empty");
  return out;
}

inline std::vector<double> parse_radii(const json& j) {
  if (j.is_array()) return parse_positive_list(j, "radii");
  allow_keys(j, {"log2_min", "log2_max", "step"}, "radii");
  const int lo = get_as<int>(j, "log2_min"), hi = get_as<int>(j, "log2_max");
  const int step = j.contains("step") ? get_as<int>(j, "step") : 1;
  if (step < 1 || hi < lo) throw ConfigError("bad radii range");
  std::vector<double> out;
  for (int e = lo; e <= hi; e += step) out.push_back(std::ldexp(1.0, e));
  return out;
}

inline std::vector<double> parse_kappas(const json& j) {
  if (j.is_array()) return parse_positive_list(j, "kappas");
  allow_keys(j, {"min", "max", "count"}, "kappas");
  const double lo = get_as<double>(j, "min"), hi = get_as<double>(j, "max");
  if (!(lo > 0) || !(hi >= lo)) throw ConfigError("bad kappas range");
  return log_spaced(lo, hi, positive_int(j, "count"));
}

inline std::uint64_t parse_seed(const json& j) {
  if (!j.at("seed").is_number_unsigned()) throw ConfigError("'seed' must be a non-negative integer");
  return get_as<std::uint64_t>(j, "seed");
}

inline int parse_grid(const json& j) {
  const int g = positive_int(j, "grid");
  if (g < 2) throw ConfigError("'grid' must be at least 2");
  return g;
}

inline std::string parse_output(const json& j) {
  return j.contains("output") ? get_as<std::string>(j, "output") : std::string();
}

}  // namespace detail

inline nlohmann::json parse_json_text(const std::string& text) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_json_text(text);
}

inline ConfigFile<M2mAccuracyConfig> parse_m2m_accuracy_config(const nlohmann::json& j) {
  detail::allow_keys(j, {"kernel", "orders", "radii", "seed", "grid", "output"}, "m2m-accuracy config");
  if (!j.contains("kernel")) throw ConfigError("missing 'kernel'");
  ConfigFile<M2mAccuracyConfig> f;
  f.config.kernel = detail::parse_kernel(j["kernel"]);
  if (j.contains("orders")) f.config.orders = detail::parse_orders(j["orders"]);
  if (j.contains("radii")) f.config.radii = detail::parse_radii(j["radii"]);
  if (j.contains("seed")) f.config.seed = detail::parse_seed(j);
  if (j.contains("grid")) f.config.grid = detail::parse_grid(j);
  f.output = detail::parse_output(j);
  return f;
}

inline ConfigFile<M2mKappaConfig> parse_m2m_kappa_config(const nlohmann::json& j) {
  detail::allow_keys(j, {"kernel", "orders", "kappas", "R", "seed", "grid", "output"}, "m2m-kappa config");
  ConfigFile<M2mKappaConfig> f;
  if (j.contains("kernel")) {
    auto kj = j["kernel"];
    if (kj.is_object() && !kj.contains("kappa")) kj["kappa"] = 1.0;
    f.config.kernel = detail::parse_kernel(kj);
  }
  if (!f.config.kernel.make().is_helmholtz()) throw ConfigError("m2m-kappa needs a Helmholtz kernel");
  if (j.contains("orders")) f.config.orders = detail::parse_orders(j["orders"]);
  if (j.contains("kappas")) f.config.kappas = detail::parse_kappas(j["kappas"]);
  if (j.contains("R")) {
    f.config.R = detail::get_as<double>(j, "R");
    if (!(f.config.R > 0)) throw ConfigError("'R' must be positive");
  }
  if (j.contains("seed")) f.config.seed = detail::parse_seed(j);
  if (j.contains("grid")) f.config.grid = detail::parse_grid(j);
  f.output = detail::parse_output(j);
  return f;
}

inline ConfigFile<OpcountConfig> parse_opcount_config(const nlohmann::json& j) {
  detail::allow_keys(j, {"kernel", "orders", "ops", "output"}, "opcount config");
  if (!j.contains("kernel")) throw ConfigError("missing 'kernel'");
  ConfigFile<OpcountConfig> f;
  f.config.kernel = detail::parse_kernel(j["kernel"]);
  if (j.contains("orders")) f.config.orders = detail::parse_orders(j["orders"]);
  if (j.contains("ops")) {
    f.config.ops.clear();
    for (const auto& v : j["ops"]) {
      if (!v.is_string()) throw ConfigError("ops must be operator names");
      const auto name = v.get<std::string>();
      if (std::find(operator_names().begin(), operator_names().end(), name) == operator_names().end())
        throw ConfigError("unknown operator '" + name + "'");
      f.config.ops.push_back(name);
    }
    if (f.config.ops.empty()) throw ConfigError("ops must not be empty");
  }
  f.output = detail::parse_output(j);
  return f;
}

}  // namespace cfmm
