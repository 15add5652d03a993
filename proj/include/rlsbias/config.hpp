#pragma once

/** @file
 * Scenario configuration: built-in defaults for the four reference
 * experiments, a flat `key = value` file format, and validation.
 *
 * File format: one `key = value` per line, `#` starts a comment, list values
 * are comma separated. Keys match the CLI long options, with either `-` or
 * `_` as separator (`r-grid` and `r_grid` are the same key).
 */

#include <algorithm>
#include <cctype>
#include <cmath>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "rlsbias/errors.hpp"
#include "rlsbias/matrix_kernel.hpp"

namespace rlsbias {

enum class ScenarioId { E1, E2, E3, E4, Custom };
enum class InputDistribution { Uniform, Gaussian };

inline std::string to_string(ScenarioId id) {
  switch (id) {
    case ScenarioId::E1: return "e1";
    case ScenarioId::E2: return "e2";
    case ScenarioId::E3: return "e3";
    case ScenarioId::E4: return "e4";
    case ScenarioId::Custom: return "custom";
  }
  return "?";
}

inline std::string to_string(InputDistribution d) {
  return d == InputDistribution::Uniform ? "uniform" : "gaussian";
}

struct ScenarioConfig {
  ScenarioId scenario = ScenarioId::E2;
  long n = 4;
  long p = 1;
  long q = 1;
  long w = 0;
  double r = 1e-5;
  std::vector<double> r_grid;  ///< when non-empty, overrides r
  std::optional<Vector> theta0;
  std::optional<Vector> theta;  ///< fixed true parameters (e2/custom); sampled otherwise
  long trials = 10;
  long steps = 10000;
  std::uint64_t seed = 1;
  InputDistribution input = InputDistribution::Uniform;
  std::vector<double> variances;  ///< per-column variances for gaussian regressors
  std::string out_dir = "out";
  bool per_trial = false;
  long kappa_every = 1;
  unsigned workers = 1;

  std::vector<double> r_values() const { return r_grid.empty() ? std::vector<double>{r} : r_grid; }
  Vector prior() const { return theta0 ? *theta0 : Vector::Zero(n); }

  static ScenarioConfig defaults(ScenarioId id);
};

inline ScenarioConfig ScenarioConfig::defaults(ScenarioId id) {
  ScenarioConfig c;
  c.scenario = id;
  switch (id) {
    case ScenarioId::E1:
      c.n = 10;
      c.trials = 100;
      c.r_grid = {1e-1, 1e-2, 1e-3, 1e-4, 1e-5};
      break;
    case ScenarioId::E2:
      c.n = 4;
      c.input = InputDistribution::Gaussian;
      c.variances = {0.1, 1.0, 10.0, 100.0};
      c.theta = Vector::Ones(4);
      break;
    case ScenarioId::E3:
      c.n = 4;
      c.w = 4;
      c.trials = 1;
      break;
    case ScenarioId::E4:
      c.n = 4;
      c.w = 2;
      c.trials = 1;
      break;
    case ScenarioId::Custom:
      c.steps = 1000;
      break;
  }
  return c;
}

namespace detail {

inline std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

inline std::string normalize_key(std::string key) {
  std::replace(key.begin(), key.end(), '-', '_');
  std::transform(key.begin(), key.end(), key.begin(), [](unsigned char ch) { return std::tolower(ch); });
  return key;
}

template <class T>
T parse_number(const std::string& key, std::string_view text) {
  const std::string t = trim(text);
  T value{};
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw ConfigError("config: cannot parse '" + t + "' for key '" + key + "'");
  }
  return value;
}

inline std::vector<double> parse_list(const std::string& key, std::string_view text) {
  std::vector<double> out;
  std::string item;
  std::istringstream in{std::string(text)};
  while (std::getline(in, item, ',')) {
    if (trim(item).empty()) continue;
    out.push_back(parse_number<double>(key, item));
  }
  if (out.empty()) throw ConfigError("config: empty list for key '" + key + "'");
  return out;
}

inline Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

inline bool parse_bool(const std::string& key, std::string_view text) {
  const std::string t = trim(text);
  if (t == "1" || t == "true" || t == "yes" || t == "on") return true;
  if (t == "0" || t == "false" || t == "no" || t == "off") return false;
  throw ConfigError("config: expected a boolean for key '" + key + "', got '" + t + "'");
}

}  // namespace detail

inline ScenarioId parse_scenario_id(std::string_view text) {
  std::string t = detail::normalize_key(detail::trim(text));
  if (t == "e1") return ScenarioId::E1;
  if (t == "e2") return ScenarioId::E2;
  if (t == "e3") return ScenarioId::E3;
  if (t == "e4") return ScenarioId::E4;
  if (t == "custom") return ScenarioId::Custom;
  throw ConfigError("config: unknown scenario '" + t + "'");
}

inline InputDistribution parse_distribution(std::string_view text) {
  const std::string t = detail::normalize_key(detail::trim(text));
  if (t == "uniform") return InputDistribution::Uniform;
  if (t == "gaussian" || t == "normal") return InputDistribution::Gaussian;
  throw ConfigError("config: unknown input distribution '" + t + "'");
}

/// Applies one setting; `scenario` is expected to have been handled first
/// because it resets everything else to that scenario's defaults.
inline void apply_setting(ScenarioConfig& c, const std::string& raw_key, std::string_view value) {
  using detail::parse_number;
  const std::string key = detail::normalize_key(raw_key);
  if (key == "scenario") {
    c = ScenarioConfig::defaults(parse_scenario_id(value));
  } else if (key == "n") {
    c.n = parse_number<long>(key, value);
  } else if (key == "p") {
    c.p = parse_number<long>(key, value);
  } else if (key == "q") {
    c.q = parse_number<long>(key, value);
  } else if (key == "w") {
    c.w = parse_number<long>(key, value);
  } else if (key == "r") {
    c.r = parse_number<double>(key, value);
    c.r_grid.clear();
  } else if (key == "r_grid") {
    c.r_grid = detail::parse_list(key, value);
  } else if (key == "theta0") {
    c.theta0 = detail::to_vector(detail::parse_list(key, value));
  } else if (key == "theta") {
    c.theta = detail::to_vector(detail::parse_list(key, value));
  } else if (key == "trials") {
    c.trials = parse_number<long>(key, value);
  } else if (key == "steps") {
    c.steps = parse_number<long>(key, value);
  } else if (key == "seed") {
    c.seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "input") {
    c.input = parse_distribution(value);
  } else if (key == "variances") {
    c.variances = detail::parse_list(key, value);
    c.input = InputDistribution::Gaussian;
  } else if (key == "out") {
    c.out_dir = detail::trim(value);
  } else if (key == "per_trial") {
    c.per_trial = detail::parse_bool(key, value);
  } else if (key == "kappa_every") {
    c.kappa_every = parse_number<long>(key, value);
  } else if (key == "workers") {
    c.workers = parse_number<unsigned>(key, value);
  } else {
    throw ConfigError("config: unknown key '" + raw_key + "'");
  }
}

/// Parses `key = value` text. A `scenario` line, wherever it appears, is
/// applied before the other keys; `scenario_override` replaces it. Text
/// without any scenario is a ConfigError.
inline ScenarioConfig parse_config(std::string_view text, std::optional<ScenarioId> scenario_override = {}) {
  std::vector<std::pair<std::string, std::string>> entries;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (detail::trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config: line " + std::to_string(lineno) + " is not 'key = value'");
    }
    entries.emplace_back(detail::trim(std::string_view(line).substr(0, eq)),
                         detail::trim(std::string_view(line).substr(eq + 1)));
  }
  std::optional<ScenarioId> id = scenario_override;
  for (const auto& [k, v] : entries) {
    if (!id && detail::normalize_key(k) == "scenario") id = parse_scenario_id(v);
  }
  if (!id) throw ConfigError("config: no scenario given");
  ScenarioConfig c = ScenarioConfig::defaults(*id);
  for (const auto& [k, v] : entries) {
    if (detail::normalize_key(k) != "scenario") apply_setting(c, k, v);
  }
  return c;
}

inline ScenarioConfig load_config_file(const std::string& path, std::optional<ScenarioId> scenario_override = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), scenario_override);
}

/// Checks ranges and the dimensions each scenario fixes.
inline void validate(const ScenarioConfig& c) {
  auto fail = [](const std::string& msg) { throw ConfigError("config: " + msg); };
  for (double r : c.r_values()) {
    if (!(r > 0.0) || !std::isfinite(r)) fail("r must be positive");
  }
  if (c.trials < 1) fail("trials must be >= 1");
  if (c.steps < 1) fail("steps must be >= 1");
  if (c.kappa_every < 1) fail("kappa-every must be >= 1");
  if (c.workers < 1) fail("workers must be >= 1");
  if (c.n < 1 || c.p < 1 || c.q < 1) fail("n, p, q must be >= 1");
  switch (c.scenario) {
    case ScenarioId::E1:
      if (c.p != 1) fail("e1 uses scalar measurements (p = 1)");
      break;
    case ScenarioId::E2:
      if (c.p != 1) fail("e2 uses scalar measurements (p = 1)");
      break;
    case ScenarioId::E3:
      if (c.n != 4 || c.p != 1 || c.q != 1 || c.w != 4) fail("e3 is the scalar 4-tap FIR model (n = 4, w = 4)");
      break;
    case ScenarioId::E4:
      if (c.n != 4 || c.p != 1 || c.q != 1 || c.w != 2) fail("e4 is the scalar 2nd-order IIR model (n = 4, w = 2)");
      break;
    case ScenarioId::Custom:
      break;
  }
  const bool regression = c.scenario == ScenarioId::E1 || c.scenario == ScenarioId::E2 ||
                          c.scenario == ScenarioId::Custom;
  if (regression && c.input == InputDistribution::Gaussian) {
    if (static_cast<long>(c.variances.size()) != c.n) fail("variances must list one value per parameter");
    for (double v : c.variances) {
      if (!(v >= 0.0) || !std::isfinite(v)) fail("variances must be nonnegative");
    }
  }
  if (!regression && c.input != InputDistribution::Uniform) fail("e3/e4 inputs are uniform on [-1, 1]");
  if (c.theta0 && c.theta0->size() != c.n) fail("theta0 must have n entries");
  if (c.theta && c.theta->size() != c.n) fail("theta must have n entries");
  if (c.theta && !regression) fail("theta is fixed by the e3/e4 model");
}

}  // namespace rlsbias
