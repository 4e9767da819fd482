// Copyright 2026 The MIM Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

/**
 * \file scene_io.hpp
 * \brief Scene files, robot profiles and run configuration (JSON, schema version 1).
 *
 * Every parse error is a SchemaError whose message starts with the JSON path
 * of the offending field, e.g. `primitives[3].radius: must be positive`.
 */

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "mim/fn_tracker.hpp"
#include "mim/inflation.hpp"
#include "mim/lidar_sim.hpp"
#include "mim/map_builder.hpp"
#include "mim/planner.hpp"

namespace mim
{

inline constexpr int kSchemaVersion = 1;

class SchemaError : public std::runtime_error
{
public:
  SchemaError(const std::string & path, const std::string & what)
  : std::runtime_error(path + ": " + what), path_(path) {}

  const std::string & path() const {return path_;}

private:
  std::string path_;
};

namespace json_detail
{

using nlohmann::json;

inline std::string join(const std::string & base, const std::string & key)
{
  return base.empty() ? key : base + "." + key;
}

inline std::string index(const std::string & base, std::size_t i)
{
  return base + "[" + std::to_string(i) + "]";
}

inline const json & require(const json & j, const std::string & key, const std::string & path)
{
  if (!j.is_object()) {
    throw SchemaError(path.empty() ? "<root>" : path, "expected an object");
  }
  auto it = j.find(key);
  if (it == j.end()) {
    throw SchemaError(join(path, key), "missing required field");
  }
  return *it;
}

inline double number(const json & v, const std::string & path)
{
  if (!v.is_number()) {
    throw SchemaError(path, "expected a number");
  }
  const double d = v.get<double>();
  if (!std::isfinite(d)) {
    throw SchemaError(path, "must be finite");
  }
  return d;
}

inline double number(const json & j, const std::string & key, const std::string & path)
{
  return number(require(j, key, path), join(path, key));
}

inline std::string string(const json & j, const std::string & key, const std::string & path)
{
  const json & v = require(j, key, path);
  if (!v.is_string()) {
    throw SchemaError(join(path, key), "expected a string");
  }
  return v.get<std::string>();
}

inline std::array<double, 2> pair(const json & j, const std::string & key, const std::string & path)
{
  const json & v = require(j, key, path);
  const std::string p = join(path, key);
  if (!v.is_array() || v.size() != 2) {
    throw SchemaError(p, "expected an array of 2 numbers");
  }
  return {number(v[0], index(p, 0)), number(v[1], index(p, 1))};
}

/// Read an optional field into `out`, leaving it untouched when absent.
template<typename T>
void optional(const json & j, const std::string & key, const std::string & path, T & out)
{
  if (!j.is_object()) {
    throw SchemaError(path.empty() ? "<root>" : path, "expected an object");
  }
  auto it = j.find(key);
  if (it == j.end()) {
    return;
  }
  const std::string p = join(path, key);
  if constexpr (std::is_same_v<T, bool>) {
    if (!it->is_boolean()) {
      throw SchemaError(p, "expected a boolean");
    }
    out = it->template get<bool>();
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!it->is_string()) {
      throw SchemaError(p, "expected a string");
    }
    out = it->template get<std::string>();
  } else if constexpr (std::is_integral_v<T>) {
    if (!it->is_number_integer()) {
      throw SchemaError(p, "expected an integer");
    }
    if constexpr (std::is_unsigned_v<T>) {
      if (it->is_number_unsigned() == false && it->template get<long long>() < 0) {
        throw SchemaError(p, "must be non-negative");
      }
    }
    out = it->template get<T>();
  } else {
    out = static_cast<T>(number(*it, p));
  }
}

inline void positive(double v, const std::string & path)
{
  if (!(v > 0.0)) {
    throw SchemaError(path, "must be positive");
  }
}

inline void check_version(const json & j, const std::string & what)
{
  int version = kSchemaVersion;
  optional(j, "schema_version", "", version);
  if (version != kSchemaVersion) {
    throw SchemaError("schema_version", what + " schema version " + std::to_string(version) + " is not supported (expected " +
            std::to_string(kSchemaVersion) + ")");
  }
}

inline json parse_file(const std::filesystem::path & path)
{
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open file: " + path.string());
  }
  try {
    return json::parse(in);
  } catch (const json::parse_error & e) {
    throw SchemaError("<root>", std::string("invalid JSON in ") + path.string() + ": " + e.what());
  }
}

}  // namespace json_detail

struct RobotProfile
{
  std::string name{"turtlebot"};
  double radius{0.18};
  double height{0.6};
  double sensor_height{0.45};
  double v_max{0.5};
  double omega_max{1.5};
  double accel_v{1.0};
  double accel_omega{3.0};
  double inflation_radius{0.5};   // major-axis inflation distance

  static RobotProfile turtlebot() {return {};}

  static RobotProfile spot()
  {
    return {"spot", 0.55, 0.7, 0.6, 1.0, 1.0, 1.0, 2.0, 1.0};
  }

  static RobotProfile by_name(const std::string & name)
  {
    if (name == "turtlebot") {
      return turtlebot();
    }
    if (name == "spot") {
      return spot();
    }
    throw SchemaError("robot", "unknown robot profile '" + name + "' (expected turtlebot|spot)");
  }

  /// Kernel size covering the inflation radius on both sides of the obstacle.
  int kernel_size(double g) const {return 2 * static_cast<int>(std::ceil(inflation_radius / g - 1e-9)) + 1;}
  /// Perpendicular padding covering the body radius.
  int padding(double g) const {return static_cast<int>(std::ceil(radius / g - 1e-9));}
};

/// Optional straight passage whose free width is monitored (e.g. a doorway).
struct Passage
{
  double ax, ay, bx, by;
};

struct Scene
{
  std::string name;
  std::vector<Primitive> primitives;
  Pose2D start;
  Vec2 goal;
  std::string robot{"turtlebot"};
  std::optional<double> timeout_s;
  std::optional<Passage> passage;
};

inline Material parse_material(const nlohmann::json & v, const std::string & path)
{
  using namespace json_detail;
  if (v.is_string()) {
    const std::string name = v.get<std::string>();
    if (name == "concrete") {return Material::concrete();}
    if (name == "bark") {return Material::bark();}
    if (name == "bush") {return Material::bush();}
    if (name == "glass") {return Material::glass();}
    if (name == "grass") {return Material::grass();}
    if (name == "curtain") {return Material::curtain();}
    throw SchemaError(path, "unknown material '" + name + "'");
  }
  if (!v.is_object()) {
    throw SchemaError(path, "expected a material name or object");
  }
  Material m;
  const std::string kind = string(v, "kind", path);
  if (kind == "solid_opaque") {
    m.kind = MaterialKind::solid_opaque;
  } else if (kind == "transparent") {
    m.kind = MaterialKind::transparent;
  } else if (kind == "sparse_pliable") {
    m.kind = MaterialKind::sparse_pliable;
  } else {
    throw SchemaError(join(path, "kind"), "expected solid_opaque|transparent|sparse_pliable");
  }
  m.base_intensity = number(v, "base_intensity", path);
  optional(v, "pass_probability", path, m.pass_probability);
  optional(v, "scatter_sigma", path, m.scatter_sigma);
  if (m.base_intensity < 0.0 || m.base_intensity > 1.0) {
    throw SchemaError(join(path, "base_intensity"), "must be in [0, 1]");
  }
  if (m.pass_probability < 0.0 || m.pass_probability > 1.0) {
    throw SchemaError(join(path, "pass_probability"), "must be in [0, 1]");
  }
  if (m.scatter_sigma < 0.0) {
    throw SchemaError(join(path, "scatter_sigma"), "must be non-negative");
  }
  return m;
}

inline Primitive parse_primitive(const nlohmann::json & v, const std::string & path)
{
  using namespace json_detail;
  Primitive p;
  p.material = parse_material(require(v, "material", path), join(path, "material"));
  p.passable = p.material.kind == MaterialKind::sparse_pliable;
  optional(v, "passable", path, p.passable);
  optional(v, "label", path, p.label);
  const std::string shape = string(v, "shape", path);
  std::array<double, 2> z{0.0, 2.0};
  if (v.contains("z")) {
    z = pair(v, "z", path);
  }
  if (!(z[1] > z[0])) {
    throw SchemaError(join(path, "z"), "need z[1] > z[0]");
  }
  if (shape == "box") {
    const auto lo = pair(v, "min", path);
    const auto hi = pair(v, "max", path);
    if (!(hi[0] > lo[0] && hi[1] > lo[1])) {
      throw SchemaError(join(path, "max"), "must exceed min in x and y");
    }
    p.shape = Box{lo[0], lo[1], z[0], hi[0], hi[1], z[1]};
  } else if (shape == "cylinder") {
    const auto c = pair(v, "center", path);
    const double r = number(v, "radius", path);
    positive(r, join(path, "radius"));
    p.shape = Cylinder{c[0], c[1], r, z[0], z[1]};
  } else if (shape == "plane") {
    const auto a = pair(v, "a", path);
    const auto b = pair(v, "b", path);
    if (a == b) {
      throw SchemaError(join(path, "b"), "segment has zero length");
    }
    p.shape = PlaneSegment{a[0], a[1], b[0], b[1], z[0], z[1]};
  } else {
    throw SchemaError(join(path, "shape"), "expected box|cylinder|plane, got '" + shape + "'");
  }
  return p;
}

inline Scene parse_scene(const nlohmann::json & j)
{
  using namespace json_detail;
  check_version(j, "scene");
  Scene s;
  optional(j, "name", "", s.name);
  optional(j, "robot", "", s.robot);
  const json & start = require(j, "start", "");
  s.start = {number(start, "x", "start"), number(start, "y", "start"), 0.0};
  optional(start, "yaw", "start", s.start.yaw);
  const json & goal = require(j, "goal", "");
  s.goal = {number(goal, "x", "goal"), number(goal, "y", "goal")};
  if (j.contains("timeout_s")) {
    s.timeout_s = number(j, "timeout_s", "");
    positive(*s.timeout_s, "timeout_s");
  }
  if (j.contains("passage")) {
    const auto a = pair(j["passage"], "a", "passage");
    const auto b = pair(j["passage"], "b", "passage");
    s.passage = Passage{a[0], a[1], b[0], b[1]};
  }
  const json & prims = require(j, "primitives", "");
  if (!prims.is_array()) {
    throw SchemaError("primitives", "expected an array");
  }
  for (std::size_t i = 0; i < prims.size(); ++i) {
    s.primitives.push_back(parse_primitive(prims[i], index("primitives", i)));
  }
  return s;
}

inline Scene load_scene(const std::filesystem::path & path)
{
  if (!std::filesystem::exists(path)) {
    throw std::runtime_error("scene file not found: " + path.string());
  }
  Scene s = parse_scene(json_detail::parse_file(path));
  if (s.name.empty()) {
    s.name = path.stem().string();
  }
  return s;
}

struct PipelineConfig
{
  int n{200};
  double g{0.1};
  LayerSpec layers;
  double gamma_fraction{0.5};      // threshold as a fraction of R
  FnParams fn;
  InflationMode mode{InflationMode::adaptive};
  int kernel_size{0};              // 0: derive from the robot profile
  int padding{-1};                 // negative: derive from the robot profile
  bool one_sided{false};
  bool hold_blind_zone{true};      // keep solid cells that move into the lidar blind disc
  PlanCosts costs;
};

struct EpisodeConfig
{
  double control_dt{0.1};
  double goal_tolerance{0.3};
  double timeout_s{90.0};
  double frozen_window_s{5.0};
  double frozen_distance{0.05};
  double start_jitter_xy{0.1};
  double start_jitter_yaw{0.05};
  bool evaluate_fscore{true};
  int fscore_every{1};
  EscapeParams escape;
};

struct RunConfig
{
  std::string scene;
  std::string robot;               // empty: scene default
  PipelineConfig pipeline;
  PlannerParams planner;
  LidarConfig lidar;
  EpisodeConfig episode;
  int episodes{10};
  std::uint64_t seed{1};
  int snapshot_every{0};
  std::string out{"results"};
  int threads{1};
};

/// Overlay the fields present in `j` onto `cfg`.
inline void apply_config_json(const nlohmann::json & j, RunConfig & cfg)
{
  using namespace json_detail;
  check_version(j, "config");
  optional(j, "scene", "", cfg.scene);
  optional(j, "robot", "", cfg.robot);
  std::string inflation;
  optional(j, "inflation", "", inflation);
  if (!inflation.empty()) {
    try {
      cfg.pipeline.mode = inflation_mode_from_string(inflation);
    } catch (const std::invalid_argument & e) {
      throw SchemaError("inflation", e.what());
    }
  }
  optional(j, "episodes", "", cfg.episodes);
  optional(j, "seed", "", cfg.seed);
  optional(j, "snapshot_every", "", cfg.snapshot_every);
  optional(j, "out", "", cfg.out);
  optional(j, "threads", "", cfg.threads);
  optional(j, "gamma", "", cfg.pipeline.gamma_fraction);
  optional(j, "kernel_size", "", cfg.pipeline.kernel_size);
  optional(j, "padding", "", cfg.pipeline.padding);
  optional(j, "one_sided", "", cfg.pipeline.one_sided);

  if (j.contains("layers")) {
    const json & l = j["layers"];
    optional(l, "h", "layers", cfg.pipeline.layers.h);
    optional(l, "epsilon", "layers", cfg.pipeline.layers.epsilon);
    optional(l, "band", "layers", cfg.pipeline.layers.band);
  }
  if (j.contains("grid")) {
    optional(j["grid"], "n", "grid", cfg.pipeline.n);
    optional(j["grid"], "g", "grid", cfg.pipeline.g);
  }
  if (j.contains("planner")) {
    const json & p = j["planner"];
    optional(p, "horizon", "planner", cfg.planner.horizon);
    optional(p, "sim_dt", "planner", cfg.planner.sim_dt);
    optional(p, "n_v", "planner", cfg.planner.n_v);
    optional(p, "n_omega", "planner", cfg.planner.n_omega);
    optional(p, "w_obstacle", "planner", cfg.planner.w_obstacle);
    optional(p, "w_heading", "planner", cfg.planner.w_heading);
    optional(p, "w_velocity", "planner", cfg.planner.w_velocity);
    if (p.contains("escape")) {
      const json & x = p["escape"];
      optional(x, "enabled", "planner.escape", cfg.episode.escape.enabled);
      optional(x, "stall_frames", "planner.escape", cfg.episode.escape.stall_frames);
      optional(x, "stall_speed", "planner.escape", cfg.episode.escape.stall_speed);
      optional(x, "detour_distance", "planner.escape", cfg.episode.escape.detour_distance);
      optional(x, "detour_step_deg", "planner.escape", cfg.episode.escape.detour_step_deg);
      optional(x, "reach_tolerance", "planner.escape", cfg.episode.escape.reach_tolerance);
      optional(x, "max_detour_frames", "planner.escape", cfg.episode.escape.max_detour_frames);
    }
  }
  if (j.contains("episode")) {
    const json & e = j["episode"];
    optional(e, "goal_tolerance", "episode", cfg.episode.goal_tolerance);
    optional(e, "timeout_s", "episode", cfg.episode.timeout_s);
    optional(e, "evaluate_fscore", "episode", cfg.episode.evaluate_fscore);
    optional(e, "start_jitter_xy", "episode", cfg.episode.start_jitter_xy);
    optional(e, "start_jitter_yaw", "episode", cfg.episode.start_jitter_yaw);
  }
  if (j.contains("lidar")) {
    const json & l = j["lidar"];
    optional(l, "azimuth_resolution_deg", "lidar", cfg.lidar.azimuth_resolution_deg);
    optional(l, "max_range", "lidar", cfg.lidar.max_range);
    optional(l, "min_range", "lidar", cfg.lidar.min_range);
  }
}

/// Range checks for values that would otherwise fail deep inside a run.
inline void validate_config(const RunConfig & cfg)
{
  if (cfg.episodes < 1) {
    throw SchemaError("episodes", "must be at least 1");
  }
  if (!(cfg.pipeline.gamma_fraction > 0.0 && cfg.pipeline.gamma_fraction < 1.0)) {
    throw SchemaError("gamma", "must be in (0, 1) as a fraction of R");
  }
  if (cfg.pipeline.kernel_size != 0 && (cfg.pipeline.kernel_size < 1 || cfg.pipeline.kernel_size % 2 == 0)) {
    throw SchemaError("kernel_size", "must be odd and positive (or 0 to derive)");
  }
  if (cfg.snapshot_every < 0) {
    throw SchemaError("snapshot_every", "must be non-negative");
  }
  if (cfg.threads < 1) {
    throw SchemaError("threads", "must be at least 1");
  }
  try {
    cfg.pipeline.layers.validate();
  } catch (const std::invalid_argument & e) {
    throw SchemaError("layers", e.what());
  }
  try {
    cfg.planner.validate();
  } catch (const std::invalid_argument & e) {
    throw SchemaError("planner", e.what());
  }
  try {
    cfg.episode.escape.validate();
  } catch (const std::invalid_argument & e) {
    throw SchemaError("planner.escape", e.what());
  }
  try {
    GridGeometry(cfg.pipeline.n, cfg.pipeline.g);
  } catch (const std::invalid_argument & e) {
    throw SchemaError("grid", e.what());
  }
}

inline RunConfig load_config(const std::filesystem::path & path)
{
  if (!std::filesystem::exists(path)) {
    throw std::runtime_error("config file not found: " + path.string());
  }
  RunConfig cfg;
  apply_config_json(json_detail::parse_file(path), cfg);
  return cfg;
}

}  // namespace mim
