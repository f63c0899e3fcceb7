/*
 Copyright 2026 The ileg Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#pragma once

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ileg/problem.hpp"

namespace ileg {

/// Flat problem-config file:
///
///   {"preset": "cliff_world" | "scalar_lq",
///    "sigma": number, "horizon": number,
///    "noise_sd": [number...], "initial_state": [number...], "goal_state": [number...]}
///
/// Only "preset" is required. Unknown keys are rejected.
struct ProblemConfig {
  std::string preset;
  std::optional<double> sigma;
  std::optional<double> horizon;
  std::optional<std::vector<double>> noise_sd;
  std::optional<std::vector<double>> initial_state;
  std::optional<std::vector<double>> goal_state;

  bool operator==(const ProblemConfig&) const = default;
};

inline nlohmann::ordered_json to_json(const ProblemConfig& c) {
  nlohmann::ordered_json j;
  j["preset"] = c.preset;
  if (c.sigma) j["sigma"] = *c.sigma;
  if (c.horizon) j["horizon"] = *c.horizon;
  if (c.noise_sd) j["noise_sd"] = *c.noise_sd;
  if (c.initial_state) j["initial_state"] = *c.initial_state;
  if (c.goal_state) j["goal_state"] = *c.goal_state;
  return j;
}

inline std::string serialize(const ProblemConfig& c) { return to_json(c).dump(2) + "\n"; }

namespace detail {

inline std::string line_col(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

inline double number_field(const nlohmann::json& j, const std::string& key, const std::string& src) {
  if (!j.is_number()) throw ConfigError(src + ": field \"" + key + "\" must be a number");
  return j.get<double>();
}

inline std::vector<double> array_field(const nlohmann::json& j, const std::string& key,
                                       const std::string& src) {
  if (!j.is_array()) throw ConfigError(src + ": field \"" + key + "\" must be an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number())
      throw ConfigError(src + ": field \"" + key + "\"[" + std::to_string(i) + "] must be a number");
    out.push_back(j[i].get<double>());
  }
  return out;
}

}  // namespace detail

inline ProblemConfig parse_problem_config(const std::string& text, const std::string& source = "config") {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const std::size_t at = e.byte > 0 ? e.byte - 1 : 0;
    throw ConfigError(source + ": parse error at " + detail::line_col(text, at) + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError(source + ": top level must be a JSON object");

  ProblemConfig c;
  bool have_preset = false;
  for (const auto& [key, value] : j.items()) {
    if (key == "preset") {
      if (!value.is_string()) throw ConfigError(source + ": field \"preset\" must be a string");
      c.preset = value.get<std::string>();
      have_preset = true;
    } else if (key == "sigma") {
      c.sigma = detail::number_field(value, key, source);
    } else if (key == "horizon") {
      c.horizon = detail::number_field(value, key, source);
    } else if (key == "noise_sd") {
      c.noise_sd = detail::array_field(value, key, source);
    } else if (key == "initial_state") {
      c.initial_state = detail::array_field(value, key, source);
    } else if (key == "goal_state") {
      c.goal_state = detail::array_field(value, key, source);
    } else {
      throw ConfigError(source + ": unknown key \"" + key + "\"");
    }
  }
  if (!have_preset) throw ConfigError(source + ": missing required field \"preset\"");
  return c;
}

inline void require_size(const std::optional<std::vector<double>>& v, std::size_t n, const char* key,
                         const std::string& preset) {
  if (v && v->size() != n)
    throw ConfigError(preset + ": \"" + key + "\" has " + std::to_string(v->size()) +
                      " entries, expected " + std::to_string(n));
}

/// Builds the named preset with the config overrides applied. Missing sigma
/// means risk-neutral (0).
inline ControlProblem make_problem(const ProblemConfig& c) {
  if (c.preset == "cliff_world") {
    require_size(c.noise_sd, 2, "noise_sd", c.preset);
    require_size(c.initial_state, 4, "initial_state", c.preset);
    require_size(c.goal_state, 2, "goal_state", c.preset);
    CliffWorldParams p;
    if (c.sigma) p.sigma = *c.sigma;
    if (c.horizon) p.horizon = *c.horizon;
    if (c.noise_sd) {
      p.noise_sd_x = (*c.noise_sd)[0];
      p.noise_sd_y = (*c.noise_sd)[1];
    }
    if (c.initial_state) p.initial_state = Eigen::Map<const Vector>(c.initial_state->data(), 4);
    if (c.goal_state) p.goal = Eigen::Vector2d((*c.goal_state)[0], (*c.goal_state)[1]);
    return make_cliff_world(p);
  }
  if (c.preset == "scalar_lq") {
    require_size(c.noise_sd, 1, "noise_sd", c.preset);
    require_size(c.initial_state, 1, "initial_state", c.preset);
    require_size(c.goal_state, 1, "goal_state", c.preset);
    ScalarLqParams p;
    if (c.sigma) p.sigma = *c.sigma;
    if (c.horizon) p.horizon = *c.horizon;
    if (c.noise_sd) p.noise_sd = (*c.noise_sd)[0];
    if (c.initial_state) p.initial_state = (*c.initial_state)[0];
    if (c.goal_state) p.goal = (*c.goal_state)[0];
    return make_scalar_lq(p);
  }
  throw ConfigError("unknown preset \"" + c.preset + "\" (expected cliff_world or scalar_lq)");
}

inline ProblemConfig read_problem_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_problem_config(ss.str(), path);
}

inline ControlProblem load_problem(const std::string& path) { return make_problem(read_problem_config(path)); }

}  // namespace ileg
