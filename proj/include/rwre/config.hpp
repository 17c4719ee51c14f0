#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rwre/crossing_types.hpp"
#include "rwre/env.hpp"
#include "rwre/error.hpp"

namespace rwre {

enum class OutputFormat { kCsv, kJsonLines, kPretty };

inline OutputFormat parse_format(const std::string& s) {
  if (s == "csv") return OutputFormat::kCsv;
  if (s == "jsonl" || s == "json-lines") return OutputFormat::kJsonLines;
  if (s == "pretty") return OutputFormat::kPretty;
  throw Error(ErrorCode::kConfigError, "unknown format '" + s + "' (csv, jsonl, pretty)");
}

inline const char* to_string(OutputFormat f) {
  switch (f) {
    case OutputFormat::kCsv: return "csv";
    case OutputFormat::kJsonLines: return "jsonl";
    case OutputFormat::kPretty: return "pretty";
  }
  return "?";
}

/// Everything one CLI run needs. Missing fields keep these defaults.
struct ExperimentConfig {
  EnvironmentLaw law = EnvironmentLaw::homogeneous(SiteLaw::create(0.2, {0.5, 0.3}));
  int R = 2;
  double epsilon = kDefaultEpsilon;
  std::uint64_t seed = 1;
  std::int64_t paths = 100'000;
  std::int64_t n_steps = 1'000'000;
  std::int64_t depth = 10'000;
  double tol = 1e-12;
  std::int64_t env_samples = 10'000;
  std::int64_t max_steps = 10'000'000;
  OutputFormat format = OutputFormat::kPretty;
  std::string out;  // empty: stdout

  void check() const {
    if (!(tol > 0.0)) throw Error(ErrorCode::kConfigError, "tol must be positive");
    if (paths < 1) throw Error(ErrorCode::kConfigError, "paths must be >= 1");
    if (depth < 1) throw Error(ErrorCode::kConfigError, "depth must be >= 1");
    if (n_steps < 1) throw Error(ErrorCode::kConfigError, "n_steps must be >= 1");
    if (max_steps < 1) throw Error(ErrorCode::kConfigError, "max_steps must be >= 1");
    if (env_samples < 2) throw Error(ErrorCode::kConfigError, "env_samples must be >= 2");
    if (law.jump_bound() != R) throw Error(ErrorCode::kConfigError, "atoms do not match R");
  }
};

namespace detail {

template <class T>
T json_get(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfigError, std::string("field '") + key + "': " + e.what());
  }
}

inline SiteLaw parse_site(const nlohmann::json& j, int R, double eps) {
  if (!j.is_object() || !j.contains("q") || !j.contains("p")) {
    throw Error(ErrorCode::kConfigError, "site law needs fields q and p");
  }
  const auto p = json_get<std::vector<double>>(j, "p", {});
  if (static_cast<int>(p.size()) != R) {
    throw Error(ErrorCode::kConfigError, "p has " + std::to_string(p.size()) + " entries, R = " + std::to_string(R));
  }
  return SiteLaw::create(json_get<double>(j, "q", 0.0), p, eps);
}

}  // namespace detail

/// Parses the JSON experiment description:
///   {"kind": "homogeneous" | "iid" | "periodic", "R": 2, "epsilon": 1e-6,
///    "atoms": [{"q": 0.2, "p": [0.5, 0.3], "weight": 1.0}, ...],
///    "period": [{"q": ..., "p": [...]}, ...],
///    "seed": 1, "paths": 10000, "n_steps": 1000000, "depth": 10000,
///    "tol": 1e-12, "env_samples": 10000, "max_steps": 10000000,
///    "format": "pretty", "out": "results.csv"}
inline ExperimentConfig parse_config(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::kConfigError, "config must be a JSON object");
  ExperimentConfig c;
  c.R = detail::json_get<int>(j, "R", c.R);
  require_jump_bound(c.R);
  c.epsilon = detail::json_get<double>(j, "epsilon", c.epsilon);
  if (c.epsilon < 0.0) throw Error(ErrorCode::kConfigError, "epsilon must be >= 0");
  const auto kind = detail::json_get<std::string>(j, "kind", "homogeneous");

  auto sites = [&](const char* key) {
    std::vector<SiteLaw> out;
    if (!j.contains(key) || !j.at(key).is_array() || j.at(key).empty()) {
      throw Error(ErrorCode::kConfigError, std::string("kind '") + kind + "' needs a non-empty '" + key + "' array");
    }
    for (const auto& a : j.at(key)) out.push_back(detail::parse_site(a, c.R, c.epsilon));
    return out;
  };

  if (kind == "homogeneous") {
    auto atoms = sites("atoms");
    if (atoms.size() != 1) throw Error(ErrorCode::kConfigError, "homogeneous law takes exactly one atom");
    c.law = EnvironmentLaw::homogeneous(atoms.front());
  } else if (kind == "iid") {
    auto atoms = sites("atoms");
    std::vector<double> weights;
    for (const auto& a : j.at("atoms")) weights.push_back(detail::json_get<double>(a, "weight", 1.0));
    c.law = EnvironmentLaw::iid(std::move(atoms), std::move(weights));
  } else if (kind == "periodic") {
    c.law = EnvironmentLaw::periodic(sites(j.contains("period") ? "period" : "atoms"));
  } else {
    throw Error(ErrorCode::kConfigError, "unknown kind '" + kind + "' (homogeneous, iid, periodic)");
  }

  c.seed = detail::json_get<std::uint64_t>(j, "seed", c.seed);
  c.paths = detail::json_get<std::int64_t>(j, "paths", c.paths);
  c.n_steps = detail::json_get<std::int64_t>(j, "n_steps", c.n_steps);
  c.depth = detail::json_get<std::int64_t>(j, "depth", c.depth);
  c.tol = detail::json_get<double>(j, "tol", c.tol);
  c.env_samples = detail::json_get<std::int64_t>(j, "env_samples", c.env_samples);
  c.max_steps = detail::json_get<std::int64_t>(j, "max_steps", c.max_steps);
  if (j.contains("format")) c.format = parse_format(detail::json_get<std::string>(j, "format", ""));
  c.out = detail::json_get<std::string>(j, "out", c.out);
  c.check();
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfigError, "cannot open config '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfigError, "config '" + path + "': " + e.what());
  }
  return parse_config(j);
}

}  // namespace rwre
