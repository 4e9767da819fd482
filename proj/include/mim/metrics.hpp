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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "mim/core_types.hpp"
#include "mim/inflation.hpp"
#include "mim/lidar_sim.hpp"
#include "mim/map_builder.hpp"

namespace mim
{

enum class Outcome
{
  success,
  collision,
  frozen,
  timeout,
};

inline const char * to_string(Outcome o)
{
  switch (o) {
    case Outcome::success: return "success";
    case Outcome::collision: return "collision";
    case Outcome::frozen: return "frozen";
    case Outcome::timeout: return "timeout";
  }
  return "?";
}

struct TrajectoryRow
{
  double t, x, y, yaw, v, omega;
};

struct EpisodeResult
{
  std::string scene;
  InflationMode mode{InflationMode::adaptive};
  std::uint64_t seed{0};
  Outcome outcome{Outcome::timeout};
  std::string collided_with;              // label of the primitive hit
  std::vector<TrajectoryRow> trajectory;
  Pose2D start;
  Vec2 goal;
  std::vector<double> latency_ms;         // perception per frame
  std::vector<double> f_scores;           // per evaluated frame
  int admissibility_violations{0};
  int recovery_frames{0};         // no admissible candidate
  int escape_frames{0};           // stall escape in control
  int inflation_exits{0};         // commands chosen while the robot stood in inflation
  int frames{0};
  double min_passage_free_width{-1.0};    // < 0 when the scene has no passage
  bool crossed_passage{false};

  double path_length() const
  {
    double len = 0.0;
    for (std::size_t i = 1; i < trajectory.size(); ++i) {
      len += std::hypot(trajectory[i].x - trajectory[i - 1].x, trajectory[i].y - trajectory[i - 1].y);
    }
    return len;
  }
};

inline double success_rate(const std::vector<EpisodeResult> & eps)
{
  if (eps.empty()) {
    return 0.0;
  }
  const auto k = std::count_if(eps.begin(), eps.end(), [](const EpisodeResult & e) {return e.outcome == Outcome::success;});
  return static_cast<double>(k) / static_cast<double>(eps.size());
}

/// Path length over straight start-goal distance. A successful run stops
/// within the goal tolerance, so the remaining straight gap is added.
inline double norm_traj_length(const EpisodeResult & ep)
{
  const double straight = std::hypot(ep.goal.x - ep.start.x, ep.goal.y - ep.start.y);
  if (!(straight > 0.0)) {
    throw std::invalid_argument("norm_traj_length: start and goal coincide");
  }
  double len = ep.path_length();
  if (ep.outcome == Outcome::success && !ep.trajectory.empty()) {
    const auto & last = ep.trajectory.back();
    len += std::hypot(ep.goal.x - last.x, ep.goal.y - last.y);
  }
  return len / straight;
}

/// Length of a polyline divided by the straight distance between two points.
inline double norm_traj_length(const std::vector<Vec2> & path, const Vec2 & start, const Vec2 & goal)
{
  const double straight = std::hypot(goal.x - start.x, goal.y - start.y);
  if (!(straight > 0.0)) {
    throw std::invalid_argument("norm_traj_length: start and goal coincide");
  }
  double len = 0.0;
  for (std::size_t i = 1; i < path.size(); ++i) {
    len += std::hypot(path[i].x - path[i - 1].x, path[i].y - path[i - 1].y);
  }
  return len / straight;
}

/// Per-cell truth for one frame: which cells hold a visible non-passable
/// surface, and which cells are scored at all (the sensing annulus).
struct TruthLabels
{
  BinaryGrid blocking;
  BinaryGrid evaluated;
};

inline BinaryGrid annulus_mask(const GridGeometry & geom, double min_range, double max_range)
{
  BinaryGrid mask(geom, 0);
  for (int r = 0; r < geom.n(); ++r) {
    for (int c = 0; c < geom.n(); ++c) {
      const auto ctr = geom.cell_center(r, c);
      const double d = std::hypot(ctr.x_low, ctr.y_low);
      mask(r, c) = (d >= min_range && d <= max_range) ? 1 : 0;
    }
  }
  return mask;
}

/// Noise-free cast with passable primitives removed and transparent ones opaque;
/// a cell is truth-blocking when such a return lands in one of `intervals`.
inline TruthLabels truth_labels(
  const std::vector<Primitive> & scene, const Pose2D & pose, const LidarConfig & cfg, const GridGeometry & geom,
  const std::vector<HeightInterval> & intervals)
{
  TruthLabels t{BinaryGrid(geom, 0), annulus_mask(geom, cfg.min_range, cfg.max_range)};
  for (const auto & p : cast_truth(scene, pose, cfg)) {
    const bool in_layer = std::any_of(intervals.begin(), intervals.end(), [&](const HeightInterval & iv) {
          return iv.contains(p.z);
        });
    if (!in_layer) {
      continue;
    }
    if (auto idx = geom.world_to_cell(p.x, p.y)) {
      t.blocking[*idx] = 1;
    }
  }
  return t;
}

struct FScore
{
  double precision{0.0};
  double recall{0.0};
  double f{0.0};
  int true_pos{0};
  int false_pos{0};
  int false_neg{0};
};

/// Blocking-detection score over a boolean prediction and truth, restricted to `evaluated`.
inline FScore f_score(const BinaryGrid & predicted, const BinaryGrid & truth, const BinaryGrid & evaluated)
{
  const GridGeometry & geom = truth.geometry();
  if (!(predicted.geometry() == geom) || !(evaluated.geometry() == geom)) {
    throw std::invalid_argument("f_score: geometry mismatch");
  }
  FScore s;
  for (std::size_t i = 0; i < geom.cell_count(); ++i) {
    if (!evaluated.data()[i]) {
      continue;
    }
    const bool p = predicted.data()[i] != 0, t = truth.data()[i] != 0;
    s.true_pos += p && t;
    s.false_pos += p && !t;
    s.false_neg += !p && t;
  }
  if (s.true_pos + s.false_pos + s.false_neg == 0) {
    s.precision = s.recall = s.f = 1.0;
    return s;
  }
  s.precision = (s.true_pos + s.false_pos) ? static_cast<double>(s.true_pos) / (s.true_pos + s.false_pos) : 0.0;
  s.recall = (s.true_pos + s.false_neg) ? static_cast<double>(s.true_pos) / (s.true_pos + s.false_neg) : 0.0;
  s.f = (s.precision + s.recall) > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

/// Predicted-blocking cells are those detected as solid or as glass.
inline BinaryGrid predicted_blocking(const PlanMap & plan)
{
  BinaryGrid out(plan.geometry(), 0);
  for (std::size_t i = 0; i < out.data().size(); ++i) {
    const PlanClass c = plan.classes().data()[i];
    out.data()[i] = (c == PlanClass::tp || c == PlanClass::fn) ? 1 : 0;
  }
  return out;
}

inline FScore f_score(const PlanMap & plan, const TruthLabels & truth)
{
  return f_score(predicted_blocking(plan), truth.blocking, truth.evaluated);
}

struct LatencyStats
{
  double mean_ms{0.0};
  double p95_ms{0.0};
  double max_ms{0.0};
  std::size_t frames{0};
};

/// Nearest-rank percentile.
inline double percentile(std::vector<double> v, double q)
{
  if (v.empty()) {
    return 0.0;
  }
  std::sort(v.begin(), v.end());
  const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(v.size())));
  return v[std::clamp<std::size_t>(rank, 1, v.size()) - 1];
}

inline LatencyStats frame_latency(const std::vector<double> & ms)
{
  LatencyStats s;
  s.frames = ms.size();
  if (ms.empty()) {
    return s;
  }
  s.mean_ms = std::accumulate(ms.begin(), ms.end(), 0.0) / static_cast<double>(ms.size());
  s.p95_ms = percentile(ms, 0.95);
  s.max_ms = *std::max_element(ms.begin(), ms.end());
  return s;
}

inline LatencyStats frame_latency(const EpisodeResult & ep) {return frame_latency(ep.latency_ms);}

struct BatchReport
{
  std::string scene;
  InflationMode mode{InflationMode::adaptive};
  int episodes{0};
  int successes{0};
  double success_rate{0.0};
  double norm_traj_length{0.0};    // mean over successes; 0 when none
  double f_score{0.0};             // mean of per-episode per-frame means
  LatencyStats latency;
  int collisions{0};
  int frozen{0};
  int timeouts{0};
  int admissibility_violations{0};
  int inflation_exits{0};
  int escape_frames{0};
  int recovery_frames{0};
  std::vector<std::string> outcomes;
  std::vector<double> raw_lengths;  // per episode, metres
};

inline BatchReport make_report(const std::vector<EpisodeResult> & eps)
{
  BatchReport r;
  if (eps.empty()) {
    return r;
  }
  r.scene = eps.front().scene;
  r.mode = eps.front().mode;
  r.episodes = static_cast<int>(eps.size());
  std::vector<double> lat, ntl, fs;
  for (const auto & e : eps) {
    r.outcomes.emplace_back(to_string(e.outcome));
    r.raw_lengths.push_back(e.path_length());
    r.admissibility_violations += e.admissibility_violations;
    r.inflation_exits += e.inflation_exits;
    r.escape_frames += e.escape_frames;
    r.recovery_frames += e.recovery_frames;
    switch (e.outcome) {
      case Outcome::success:
        ++r.successes;
        ntl.push_back(norm_traj_length(e));
        break;
      case Outcome::collision: ++r.collisions; break;
      case Outcome::frozen: ++r.frozen; break;
      case Outcome::timeout: ++r.timeouts; break;
    }
    lat.insert(lat.end(), e.latency_ms.begin(), e.latency_ms.end());
    if (!e.f_scores.empty()) {
      fs.push_back(std::accumulate(e.f_scores.begin(), e.f_scores.end(), 0.0) / static_cast<double>(e.f_scores.size()));
    }
  }
  r.success_rate = success_rate(eps);
  r.norm_traj_length = ntl.empty() ? 0.0 : std::accumulate(ntl.begin(), ntl.end(), 0.0) / static_cast<double>(ntl.size());
  r.f_score = fs.empty() ? 0.0 : std::accumulate(fs.begin(), fs.end(), 0.0) / static_cast<double>(fs.size());
  r.latency = frame_latency(lat);
  return r;
}

inline nlohmann::json to_json(const BatchReport & r)
{
  return {
    {"schema_version", 1},
    {"scene", r.scene},
    {"inflation", to_string(r.mode)},
    {"episodes", r.episodes},
    {"successes", r.successes},
    {"success_rate", r.success_rate},
    {"norm_traj_length", r.norm_traj_length},
    {"f_score", r.f_score},
    {"latency_ms", {{"mean", r.latency.mean_ms}, {"p95", r.latency.p95_ms}, {"max", r.latency.max_ms},
      {"frames", r.latency.frames}}},
    {"collisions", r.collisions},
    {"frozen", r.frozen},
    {"timeouts", r.timeouts},
    {"admissibility_violations", r.admissibility_violations},
    {"inflation_exits", r.inflation_exits},
    {"escape_frames", r.escape_frames},
    {"recovery_frames", r.recovery_frames},
    {"outcomes", r.outcomes},
    {"raw_lengths_m", r.raw_lengths},
  };
}

/// Fixed-width table, one row per report.
inline std::string format_table(const std::vector<BatchReport> & reports)
{
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof(line), "%-18s %-9s %8s %10s %8s %10s %10s\n", "scene", "inflation", "success", "norm.len",
    "F", "lat.mean", "lat.p95");
  os << line;
  for (const auto & r : reports) {
    std::snprintf(line, sizeof(line), "%-18s %-9s %7.0f%% %10.3f %8.2f %8.2fms %8.2fms\n", r.scene.c_str(),
      to_string(r.mode), 100.0 * r.success_rate, r.norm_traj_length, r.f_score, r.latency.mean_ms, r.latency.p95_ms);
    os << line;
  }
  return os.str();
}

}  // namespace mim
