#pragma once

// Experiment configuration: a YAML file of namespaced tables, flattened to
// dotted keys and checked against a fixed schema before anything runs.

#include <yaml-cpp/yaml.h>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "omech/errors.hpp"

namespace omech::harness {

enum class ExperimentKind { VerifyAlgebra, Spectrum, EvolveKvN, EvolveQM, QuantizeCompare, EntangleMetric, EhrenfestSuite };

struct ExperimentName {
  const char* canonical;
  const char* kebab;
  ExperimentKind kind;
};

inline const std::vector<ExperimentName>& experiment_names() {
  static const std::vector<ExperimentName> names = {
      {"VerifyAlgebra", "verify-algebra", ExperimentKind::VerifyAlgebra},
      {"Spectrum", "spectrum", ExperimentKind::Spectrum},
      {"EvolveKvN", "evolve-kvn", ExperimentKind::EvolveKvN},
      {"EvolveQM", "evolve-qm", ExperimentKind::EvolveQM},
      {"QuantizeCompare", "quantize-compare", ExperimentKind::QuantizeCompare},
      {"EntangleMetric", "entangle-metric", ExperimentKind::EntangleMetric},
      {"EhrenfestSuite", "ehrenfest-suite", ExperimentKind::EhrenfestSuite},
  };
  return names;
}

inline std::string to_string(ExperimentKind k) {
  for (const auto& n : experiment_names())
    if (n.kind == k) return n.canonical;
  return "?";
}

inline ExperimentKind parse_experiment(const std::string& s) {
  for (const auto& n : experiment_names())
    if (s == n.canonical || s == n.kebab) return n.kind;
  std::string known;
  for (const auto& n : experiment_names()) known += (known.empty() ? "" : ", ") + std::string(n.canonical);
  throw ValidationError("unknown experiment kind '" + s + "' (expected one of " + known + ")");
}

enum class ValueType { Bool, UInt, Double, String, DoubleList, UIntList };

struct KeySpec {
  std::string key;
  ValueType type;
  nlohmann::json fallback;
  std::vector<std::string> choices;  // allowed strings, when nonempty
  std::string help;
};

/// Every configuration key the runner understands.
inline const std::vector<KeySpec>& schema() {
  using J = nlohmann::json;
  static const std::vector<KeySpec> keys = {
      {"seed", ValueType::UInt, 0, {}, "master seed; module seeds default to it"},

      {"algebra.n", ValueType::UInt, 1, {}, "degrees of freedom"},
      {"algebra.N", ValueType::UInt, 64, {}, "representation dimension per degree of freedom"},
      {"algebra.hbar", ValueType::Double, 1.0, {}, "hbar_eff, kappa = i hbar_eff"},
      {"algebra.rep", ValueType::String, "ladder", {"ladder", "position-grid"}, "generator representation"},
      {"algebra.budget", ValueType::UInt, 4096, {}, "maximum total dimension N^n"},

      {"potential.coefficients", ValueType::DoubleList, J::array({0.0, 0.0, 0.5}),
       {}, "a_k of V = sum_k a_k x^k, applied to every degree of freedom"},
      {"potential.mass", ValueType::Double, 1.0, {}, "mass m"},

      {"spectral.weights", ValueType::DoubleList, J::array(), {}, "w_i; empty means uniform"},
      {"spectral.m", ValueType::UIntList, J::array({0, 1, 2, 3}), {}, "eigenvalue indices to evaluate"},
      {"spectral.N_list", ValueType::UIntList, J::array({64, 128, 256}), {}, "dimensions for the continuum profile"},
      {"spectral.generator", ValueType::String, "X", {"X", "P"}, "generator profiled"},
      {"spectral.ensemble", ValueType::Bool, false, {}, "also run the GUE ensemble profile"},
      {"spectral.ensemble_N", ValueType::UInt, 512, {}, "ensemble matrix dimension"},
      {"spectral.samples", ValueType::UInt, 16, {}, "ensemble sample count"},
      {"spectral.seed", ValueType::UInt, nullptr, {}, "ensemble seed (defaults to seed)"},

      {"kvn.grid.x_min", ValueType::Double, -10.0, {}, ""},
      {"kvn.grid.x_max", ValueType::Double, 10.0, {}, ""},
      {"kvn.grid.p_min", ValueType::Double, -10.0, {}, ""},
      {"kvn.grid.p_max", ValueType::Double, 10.0, {}, ""},
      {"kvn.grid.x_count", ValueType::UInt, 128, {}, "points along each position axis"},
      {"kvn.grid.p_count", ValueType::UInt, 128, {}, "points along each momentum axis"},
      {"kvn.grid.boundary", ValueType::String, "periodic", {"periodic", "zero-padded"}, ""},
      {"kvn.dt", ValueType::Double, 0.00613592315154256, {}, "time step (default 2 pi / 1024)"},
      {"kvn.steps", ValueType::UInt, 1024, {}, "number of steps"},
      {"kvn.stride", ValueType::UInt, 16, {}, "observation stride"},
      {"kvn.x0", ValueType::Double, 2.0, {}, "initial mean position"},
      {"kvn.p0", ValueType::Double, 0.0, {}, "initial mean momentum"},
      {"kvn.sigma_x", ValueType::Double, 0.7071067811865476, {}, "position spread of |psi|^2"},
      {"kvn.sigma_p", ValueType::Double, 0.7071067811865476, {}, "momentum spread of |psi|^2"},
      {"kvn.write_frames", ValueType::Bool, false, {}, "write binary trajectory frames"},

      {"qm.hbar", ValueType::Double, 1.0, {}, "hbar_eff, kappa~ = i hbar_eff"},
      {"qm.grid.min", ValueType::Double, -12.0, {}, ""},
      {"qm.grid.max", ValueType::Double, 12.0, {}, ""},
      {"qm.grid.points", ValueType::UInt, 512, {}, ""},
      {"qm.grid.boundary", ValueType::String, "periodic", {"periodic", "dirichlet"}, ""},
      {"qm.dt", ValueType::Double, 0.0015339807878856412, {}, "time step (default 2 pi / 4096)"},
      {"qm.steps", ValueType::UInt, 4096, {}, ""},
      {"qm.stride", ValueType::UInt, 64, {}, ""},
      {"qm.x0", ValueType::Double, 2.0, {}, ""},
      {"qm.p0", ValueType::Double, 0.0, {}, ""},
      {"qm.sigma", ValueType::Double, 0.7071067811865476, {}, "position spread of |psi|^2"},
      {"qm.potential_mode", ValueType::String, "shifted", {"shifted", "textbook"}, "use V~ or V in H_qm"},
      {"qm.write_frames", ValueType::Bool, false, {}, "write binary trajectory frames"},
      {"qm.eigenvalues", ValueType::UInt, 4, {}, "lowest eigenvalues reported (Dirichlet grids)"},
      {"qm.calops_points", ValueType::UInt, 128, {}, "phase grid points per axis for the calops check"},
      {"qm.calops_fields", ValueType::UInt, 4, {}, "random test fields for the calops check"},

      {"geometry.source", ValueType::String, "realized", {"realized", "random"}, "density source"},
      {"geometry.N", ValueType::UInt, 16, {}, "mode dimension for random densities"},
      {"geometry.blocks", ValueType::UInt, 4, {}, "number of blocks"},
      {"geometry.partition", ValueType::String, "contiguous", {"contiguous", "random"}, ""},
      {"geometry.basis", ValueType::String, "density", {"density", "position"}, "reference basis for blocks"},
      {"geometry.draws", ValueType::UInt, 1, {}, "number of seeded (rho, partition) draws"},
      {"geometry.seed", ValueType::UInt, nullptr, {}, "defaults to seed"},
  };
  return keys;
}

inline const KeySpec* find_key(const std::string& key) {
  for (const auto& k : schema())
    if (k.key == key) return &k;
  return nullptr;
}

/// Validated, fully defaulted parameter set.
class ExperimentConfig {
 public:
  ExperimentKind kind = ExperimentKind::VerifyAlgebra;
  std::string output_dir = "omech-out";

  ExperimentConfig() {
    for (const auto& k : schema()) values_[k.key] = k.fallback;
  }

  const nlohmann::json& raw(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ValidationError("unknown configuration key: " + key);
    return it->second;
  }

  double number(const std::string& key) const { return raw(key).get<double>(); }
  std::uint64_t uint(const std::string& key) const { return raw(key).get<std::uint64_t>(); }
  std::size_t count(const std::string& key) const { return std::size_t(uint(key)); }
  bool flag(const std::string& key) const { return raw(key).get<bool>(); }
  std::string text(const std::string& key) const { return raw(key).get<std::string>(); }
  std::vector<double> numbers(const std::string& key) const { return raw(key).get<std::vector<double>>(); }
  std::vector<std::size_t> counts(const std::string& key) const { return raw(key).get<std::vector<std::size_t>>(); }

  /// A module seed, falling back to the master seed when unset.
  std::uint64_t seed_for(const std::string& key) const {
    const auto& v = raw(key);
    return v.is_null() ? uint("seed") : v.get<std::uint64_t>();
  }

  void set(const std::string& key, nlohmann::json value) { values_[key] = std::move(value); }

  /// Every key, sorted, as a flat JSON object (the report's config echo).
  nlohmann::json echo() const {
    nlohmann::json out = nlohmann::json::object();
    for (const auto& [k, v] : values_) out[k] = v;
    return out;
  }

 private:
  std::map<std::string, nlohmann::json> values_;
};

namespace detail {

inline nlohmann::json convert_scalar(const std::string& key, const std::string& text, ValueType type) {
  const auto fail = [&](const char* what) -> nlohmann::json {
    throw ValidationError("configuration key " + key + ": expected " + what + ", got '" + text + "'");
  };
  try {
    std::size_t used = 0;
    switch (type) {
      case ValueType::Bool:
        if (text == "true" || text == "True" || text == "1") return true;
        if (text == "false" || text == "False" || text == "0") return false;
        return fail("a boolean");
      case ValueType::UInt:
      case ValueType::UIntList: {
        if (text.empty() || text[0] == '-') return fail("a nonnegative integer");
        const auto v = std::stoull(text, &used, 0);
        if (used != text.size()) return fail("a nonnegative integer");
        return std::uint64_t(v);
      }
      case ValueType::Double:
      case ValueType::DoubleList: {
        const double v = std::stod(text, &used);
        if (used != text.size() || !std::isfinite(v)) return fail("a finite number");
        return v;
      }
      case ValueType::String: return text;
    }
  } catch (const ValidationError&) {
    throw;
  } catch (const std::exception&) {
    return fail(type == ValueType::Bool ? "a boolean" : "a number");
  }
  return nullptr;
}

/// Typed conversion of a YAML node according to the key's schema entry.
inline nlohmann::json convert(const KeySpec& spec, const YAML::Node& node) {
  const bool list = spec.type == ValueType::DoubleList || spec.type == ValueType::UIntList;
  if (list) {
    nlohmann::json arr = nlohmann::json::array();
    if (node.IsSequence()) {
      for (const auto& item : node) {
        if (!item.IsScalar()) throw ValidationError("configuration key " + spec.key + ": list items must be scalars");
        arr.push_back(convert_scalar(spec.key, item.Scalar(), spec.type));
      }
    } else if (node.IsScalar()) {
      // Comma-separated shorthand for --set.
      std::string s = node.Scalar();
      std::size_t start = 0;
      while (start <= s.size() && !s.empty()) {
        const auto end = s.find(',', start);
        std::string item = s.substr(start, end == std::string::npos ? std::string::npos : end - start);
        item.erase(0, item.find_first_not_of(" \t"));
        item.erase(item.find_last_not_of(" \t") + 1);
        if (!item.empty()) arr.push_back(convert_scalar(spec.key, item, spec.type));
        if (end == std::string::npos) break;
        start = end + 1;
      }
    } else if (!node.IsNull()) {
      throw ValidationError("configuration key " + spec.key + ": expected a list");
    }
    return arr;
  }
  if (!node.IsScalar()) throw ValidationError("configuration key " + spec.key + ": expected a scalar value");
  nlohmann::json v = convert_scalar(spec.key, node.Scalar(), spec.type);
  if (!spec.choices.empty() &&
      std::find(spec.choices.begin(), spec.choices.end(), v.get<std::string>()) == spec.choices.end()) {
    std::string allowed;
    for (const auto& c : spec.choices) allowed += (allowed.empty() ? "" : ", ") + c;
    throw ValidationError("configuration key " + spec.key + ": '" + v.get<std::string>() + "' is not one of " + allowed);
  }
  return v;
}

inline void flatten(const YAML::Node& node, const std::string& prefix, std::vector<std::pair<std::string, YAML::Node>>& out) {
  if (node.IsMap()) {
    for (const auto& kv : node) {
      const std::string key = prefix.empty() ? kv.first.as<std::string>() : prefix + "." + kv.first.as<std::string>();
      // Tables recurse; anything else is a leaf (scalars and value lists).
      if (kv.second.IsMap()) {
        flatten(kv.second, key, out);
      } else {
        out.emplace_back(key, kv.second);
      }
    }
  } else if (!node.IsNull()) {
    throw ValidationError("configuration root must be a table of namespaces");
  }
}

}  // namespace detail

/// Applies YAML text onto cfg; all unknown keys are reported together.
inline void apply_yaml(ExperimentConfig& cfg, const std::string& text, const std::string& origin) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ValidationError(origin + ": YAML parse error: " + e.what());
  }
  std::vector<std::pair<std::string, YAML::Node>> leaves;
  detail::flatten(root, "", leaves);
  std::vector<std::string> unknown;
  for (const auto& [key, node] : leaves) {
    const auto* spec = find_key(key);
    if (!spec) {
      unknown.push_back(key);
      continue;
    }
    cfg.set(key, detail::convert(*spec, node));
  }
  if (!unknown.empty()) {
    std::string list;
    for (const auto& k : unknown) list += (list.empty() ? "" : ", ") + k;
    throw ValidationError(origin + ": unknown configuration key(s): " + list);
  }
}

/// Applies one "key=value" override.
inline void apply_override(ExperimentConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ValidationError("override must look like key=value: " + assignment);
  const std::string key = assignment.substr(0, eq);
  const std::string value = assignment.substr(eq + 1);
  const auto* spec = find_key(key);
  if (!spec) throw ValidationError("unknown configuration key(s): " + key);
  YAML::Node node;
  try {
    node = YAML::Load(value);
  } catch (const YAML::Exception& e) {
    throw ValidationError("override " + key + ": cannot parse value '" + value + "'");
  }
  if (node.IsNull()) node = YAML::Node(value);
  cfg.set(key, detail::convert(*spec, node));
}

}  // namespace omech::harness
