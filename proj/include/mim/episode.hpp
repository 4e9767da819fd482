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
 * \file episode.hpp
 * \brief Per-frame perception pipeline and the closed-loop episode runner.
 */

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <random>
#include <span>
#include <thread>
#include <vector>

#include "mim/classifier.hpp"
#include "mim/core_types.hpp"
#include "mim/fn_tracker.hpp"
#include "mim/inflation.hpp"
#include "mim/lidar_sim.hpp"
#include "mim/map_builder.hpp"
#include "mim/metrics.hpp"
#include "mim/planner.hpp"
#include "mim/scene_io.hpp"

namespace mim
{

struct StageTimings
{
  double build_ms{0.0};
  double classify_ms{0.0};
  double fn_ms{0.0};
  double inflate_ms{0.0};
  double total_ms{0.0};
};

struct PerceptionOutput
{
  MultiLayerMap layers;
  ClassifiedMaps classes;
  FNMap fn;
  InflationKernel kernel;
  BinaryGrid inflated;
  PlanMap plan;
  std::size_t held_cells{0};   // solid cells supplied from memory inside the blind disc
  StageTimings timing;
};

/// Concrete pipeline parameters after profile-dependent defaults are resolved.
struct ResolvedPipeline
{
  GridGeometry geom;
  LayerSpec layers;
  ClassifierParams classifier;
  FnParams fn;
  InflationMode mode;
  int kernel_size;
  int padding;
  bool one_sided;
  PlanCosts costs;
  double hold_radius{0.0};   // solid cells closer than this are remembered; 0 disables

  static ResolvedPipeline from(const PipelineConfig & cfg, const RobotProfile & robot, double max_intensity)
  {
    ResolvedPipeline r{GridGeometry(cfg.n, cfg.g), cfg.layers, ClassifierParams::from_fraction(cfg.gamma_fraction, max_intensity),
      cfg.fn, cfg.mode, cfg.kernel_size, cfg.padding, cfg.one_sided, cfg.costs};
    if (r.kernel_size <= 0) {
      r.kernel_size = robot.kernel_size(cfg.g);
    }
    if (r.padding < 0) {
      r.padding = robot.padding(cfg.g);
    }
    r.fn.gamma = r.classifier.gamma;
    r.costs.fp_value_ref = 8.0 * max_intensity / (cfg.g * cfg.g);
    r.layers.validate();
    r.classifier.validate(max_intensity);
    return r;
  }
};

class PerceptionPipeline
{
public:
  explicit PerceptionPipeline(ResolvedPipeline cfg)
  : cfg_(std::move(cfg)), tracker_(cfg_.geom, cfg_.fn)
  {
    for (auto role : LayerSpec::roles) {
      intervals_.push_back(cfg_.layers.interval(role));
    }
  }

  const ResolvedPipeline & config() const {return cfg_;}
  const std::vector<HeightInterval> & intervals() const {return intervals_;}
  void reset()
  {
    tracker_.reset();
    held_.clear();
  }

  /// `delta` is the robot motion since the previous call; `goal` is in the current robot frame.
  PerceptionOutput process(std::span<const IntensityPoint> points, const MotionDelta & delta, const Vec2 & goal, double ts = 0.0)
  {
    using clock = std::chrono::steady_clock;
    auto ms = [](clock::time_point a, clock::time_point b) {
        return std::chrono::duration<double, std::milli>(b - a).count();
      };
    const auto t0 = clock::now();
    MultiLayerMap layers = build_multilayer(points, intervals_, cfg_.geom, ts);
    const auto t1 = clock::now();
    ClassifiedMaps classes = classify(layers, cfg_.classifier);
    const auto t2 = clock::now();
    Grid<double> tp = classes.tp;
    const std::size_t held = hold_blind(tp, delta);
    BinaryGrid solid(cfg_.geom, 0);
    for (std::size_t i = 0; i < solid.data().size(); ++i) {
      solid.data()[i] = tp.data()[i] != 0.0 ? 1 : 0;
    }
    const FNMap & fn = tracker_.update(layers, delta, &solid);
    const auto t3 = clock::now();
    InflationKernel kernel = InflationKernel::square(cfg_.kernel_size);
    if (cfg_.mode == InflationMode::adaptive) {
      const bool at_goal = goal.x == 0.0 && goal.y == 0.0;
      kernel = build_kernel(at_goal ? 1.0 : goal.x, at_goal ? 0.0 : goal.y, cfg_.kernel_size, cfg_.padding, cfg_.one_sided);
    }
    BinaryGrid inflated = inflate(tp, fn, kernel);
    PlanMap plan = assemble_plan(inflated, classes.fp, cfg_.costs, &tp, &fn, cfg_.mode);
    const auto t4 = clock::now();
    StageTimings timing{ms(t0, t1), ms(t1, t2), ms(t2, t3), ms(t3, t4), ms(t0, t4)};
    return {std::move(layers), std::move(classes), fn, std::move(kernel), std::move(inflated), std::move(plan), held,
      timing};
  }

private:
  struct HeldCell
  {
    double x, y, value;
  };

  /// Adds remembered solid cells inside the blind disc to `tp`, then records
  /// the solid cells that may enter it next frame. Returns the number added.
  std::size_t hold_blind(Grid<double> & tp, const MotionDelta & delta)
  {
    if (cfg_.hold_radius <= 0.0) {
      return 0;
    }
    const GridGeometry & geom = cfg_.geom;
    const double r_hold = cfg_.hold_radius;
    std::vector<HeldCell> carried;
    std::size_t added = 0;
    for (const HeldCell & h : held_) {
      const Vec2 q = delta.apply(h.x, h.y);
      if (std::hypot(q.x, q.y) >= r_hold) {
        continue;
      }
      const auto idx = geom.world_to_cell(q.x, q.y);
      if (!idx) {
        continue;
      }
      carried.push_back({q.x, q.y, h.value});
      if (tp[*idx] == 0.0) {
        tp[*idx] = h.value;
        ++added;
      }
    }
    // Fresh cells enter at their centres; remembered ones keep their exact point.
    const double r_keep = r_hold + 2.0 * geom.g();
    held_.clear();
    for (const HeldCell & h : carried) {
      held_.push_back(h);
    }
    const int reach = static_cast<int>(std::ceil(r_keep / geom.g())) + 1;
    const int mid = geom.n() / 2;
    for (int r = std::max(0, mid - reach); r < std::min(geom.n(), mid + reach); ++r) {
      for (int c = std::max(0, mid - reach); c < std::min(geom.n(), mid + reach); ++c) {
        if (tp(r, c) == 0.0) {
          continue;
        }
        const auto ctr = geom.cell_center(r, c);
        const double d = std::hypot(ctr.x_low, ctr.y_low);
        if (d >= r_keep) {
          continue;
        }
        const bool remembered = d < r_hold && std::any_of(carried.begin(), carried.end(), [&](const HeldCell & h) {
              const auto idx = geom.world_to_cell(h.x, h.y);
              return idx && idx->r == r && idx->c == c;
            });
        if (!remembered) {
          held_.push_back({ctr.x_low, ctr.y_low, tp(r, c)});
        }
      }
    }
    return added;
  }

  ResolvedPipeline cfg_;
  FnTracker tracker_;
  std::vector<HeightInterval> intervals_;
  std::vector<HeldCell> held_;
};

/// What the snapshot hook sees each frame.
struct FrameView
{
  int frame;
  double t;
  const RobotState & robot;
  const Vec2 & goal_robot;
  const PerceptionOutput & perception;
};

using FrameHook = std::function<void(const FrameView &)>;

/// Everything an episode needs, with profile-dependent values resolved.
struct EpisodeSetup
{
  Scene scene;
  RobotProfile robot;
  ResolvedPipeline pipeline;
  PlannerParams planner;
  LidarConfig lidar;
  EpisodeConfig episode;

  static EpisodeSetup from(const Scene & scene, const RunConfig & cfg)
  {
    const RobotProfile robot = RobotProfile::by_name(cfg.robot.empty() ? scene.robot : cfg.robot);
    LidarConfig lidar = cfg.lidar;
    lidar.sensor_height = robot.sensor_height;
    PlannerParams planner = cfg.planner;
    planner.v_max = robot.v_max;
    planner.omega_max = robot.omega_max;
    planner.accel_v = robot.accel_v;
    planner.accel_omega = robot.accel_omega;
    planner.control_dt = cfg.episode.control_dt;
    planner.omega_recovery = 0.5 * robot.omega_max;
    EpisodeConfig ep = cfg.episode;
    if (scene.timeout_s) {
      ep.timeout_s = *scene.timeout_s;
    }
    ResolvedPipeline pipe = ResolvedPipeline::from(cfg.pipeline, robot, lidar.max_intensity);
    pipe.hold_radius = cfg.pipeline.hold_blind_zone ? lidar.min_range : 0.0;
    return {scene, robot, pipe, planner, lidar, ep};
  }
};

/// Label of the first non-passable primitive the robot disk overlaps, or empty.
inline std::string collision_label(const std::vector<Primitive> & scene, const Pose2D & pose, const RobotProfile & robot)
{
  for (std::size_t i = 0; i < scene.size(); ++i) {
    const Primitive & p = scene[i];
    if (p.passable) {
      continue;
    }
    const auto [z0, z1] = z_range(p.shape);
    if (z0 > robot.height || z1 < 0.0) {
      continue;
    }
    if (footprint_distance(p.shape, pose.x, pose.y) < robot.radius) {
      return p.label.empty() ? "primitive[" + std::to_string(i) + "]" : p.label;
    }
  }
  return {};
}

/// Longest run of non-blocking cells along a world segment, in metres.
inline double passage_free_width(const PlanMap & plan, const Pose2D & pose, const Passage & passage, double step = 0.01)
{
  const double len = std::hypot(passage.bx - passage.ax, passage.by - passage.ay);
  const int samples = std::max(1, static_cast<int>(std::ceil(len / step)));
  double best = 0.0, run = 0.0;
  for (int i = 0; i <= samples; ++i) {
    const double u = static_cast<double>(i) / samples;
    const Vec2 q = world_to_robot(pose, passage.ax + u * (passage.bx - passage.ax), passage.ay + u * (passage.by - passage.ay));
    auto idx = plan.geometry().world_to_cell(q.x, q.y);
    const bool free = idx && !plan.blocking(idx->r, idx->c);
    if (free) {
      run += (i == 0 ? 0.0 : len / samples);
      best = std::max(best, run);
    } else {
      run = 0.0;
    }
  }
  return best;
}

/// True when the move a -> b crosses the passage segment.
inline bool crosses(const Passage & s, double ax, double ay, double bx, double by)
{
  auto side = [](double px, double py, double qx, double qy, double x, double y) {
      return (qx - px) * (y - py) - (qy - py) * (x - px);
    };
  const double d1 = side(s.ax, s.ay, s.bx, s.by, ax, ay);
  const double d2 = side(s.ax, s.ay, s.bx, s.by, bx, by);
  const double d3 = side(ax, ay, bx, by, s.ax, s.ay);
  const double d4 = side(ax, ay, bx, by, s.bx, s.by);
  return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0));
}

/**
 * One closed-loop run: sense, build layers, classify, track glass, inflate,
 * plan, step. Terminates on reaching the goal, touching a non-passable
 * primitive, making less than `frozen_distance` net progress over
 * `frozen_window_s`, or timing out.
 */
inline EpisodeResult run_episode(const EpisodeSetup & setup, std::uint64_t seed, const FrameHook & hook = {})
{
  const auto & ep = setup.episode;
  LidarConfig lidar = setup.lidar;
  lidar.seed = seed;
  PerceptionPipeline pipeline(setup.pipeline);
  LocalController planner(setup.pipeline.geom, setup.planner, ep.escape);

  SplitMix64 jitter_rng(mix_seed(seed, 0x5157A27ULL));
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  RobotState state;
  state.pose = setup.scene.start;
  state.pose.x += ep.start_jitter_xy * unit(jitter_rng);
  state.pose.y += ep.start_jitter_xy * unit(jitter_rng);
  state.pose.yaw = wrap_angle(state.pose.yaw + ep.start_jitter_yaw * unit(jitter_rng));
  state.goal_world = setup.scene.goal;

  EpisodeResult res;
  res.scene = setup.scene.name;
  res.mode = setup.pipeline.mode;
  res.seed = seed;
  res.start = state.pose;
  res.goal = state.goal_world;

  Pose2D prev_pose = state.pose;
  std::deque<std::pair<double, Vec2>> history;
  const int max_frames = static_cast<int>(std::ceil(ep.timeout_s / ep.control_dt));

  for (int frame = 0;; ++frame) {
    const double t = frame * ep.control_dt;
    const double to_goal = std::hypot(state.goal_world.x - state.pose.x, state.goal_world.y - state.pose.y);
    if (to_goal <= ep.goal_tolerance) {
      res.outcome = Outcome::success;
      break;
    }
    if (frame >= max_frames) {
      res.outcome = Outcome::timeout;
      break;
    }

    const auto points = cast_scan(setup.scene.primitives, state, lidar, static_cast<std::uint64_t>(frame));
    const Vec2 goal = state.goal_robot();
    PerceptionOutput perc = pipeline.process(points, MotionDelta::between(prev_pose, state.pose), goal, t);
    res.latency_ms.push_back(perc.timing.total_ms);

    if (ep.evaluate_fscore && ep.fscore_every > 0 && frame % ep.fscore_every == 0) {
      const TruthLabels truth = truth_labels(setup.scene.primitives, state.pose, lidar, setup.pipeline.geom,
          {pipeline.intervals()[0], pipeline.intervals()[1], pipeline.intervals()[2]});
      res.f_scores.push_back(f_score(perc.plan, truth).f);
    }
    if (setup.scene.passage && !res.crossed_passage) {
      const auto & ps = *setup.scene.passage;
      const Vec2 mid = world_to_robot(state.pose, 0.5 * (ps.ax + ps.bx), 0.5 * (ps.ay + ps.by));
      const double d = std::hypot(mid.x, mid.y);
      if (d >= lidar.min_range && d <= lidar.max_range) {
        const double w = passage_free_width(perc.plan, state.pose, ps);
        res.min_passage_free_width = res.min_passage_free_width < 0.0 ? w : std::min(res.min_passage_free_width, w);
      }
    }

    bool escaping = false;
    const PlanDecision decision = planner.step(perc.plan, goal, state.velocity, state.pose, &escaping);
    if (decision.exiting && decision.chosen) {
      ++res.inflation_exits;
    } else if (decision.chosen && !obstacle_cost(*decision.chosen, perc.plan)) {
      ++res.admissibility_violations;
    }
    if (escaping) {
      ++res.escape_frames;
    } else if (decision.recovery) {
      ++res.recovery_frames;
    }
    if (hook) {
      hook(FrameView{frame, t, state, goal, perc});
    }

    res.trajectory.push_back({t, state.pose.x, state.pose.y, state.pose.yaw, decision.command.v, decision.command.omega});
    ++res.frames;

    prev_pose = state.pose;
    state = step_robot(state, decision.command.v, decision.command.omega, ep.control_dt);
    if (setup.scene.passage && crosses(*setup.scene.passage, prev_pose.x, prev_pose.y, state.pose.x, state.pose.y)) {
      res.crossed_passage = true;
    }

    const std::string hit = collision_label(setup.scene.primitives, state.pose, setup.robot);
    if (!hit.empty()) {
      res.outcome = Outcome::collision;
      res.collided_with = hit;
      break;
    }

    const double t_next = t + ep.control_dt;
    history.push_back({t_next, {state.pose.x, state.pose.y}});
    while (history.size() > 1 && history[1].first <= t_next - ep.frozen_window_s + 1e-9) {
      history.pop_front();
    }
    if (t_next >= ep.frozen_window_s - 1e-9 && history.front().first <= t_next - ep.frozen_window_s + 1e-9) {
      const Vec2 & old = history.front().second;
      if (std::hypot(state.pose.x - old.x, state.pose.y - old.y) < ep.frozen_distance) {
        res.outcome = Outcome::frozen;
        break;
      }
    }
  }
  res.trajectory.push_back({res.frames * ep.control_dt, state.pose.x, state.pose.y, state.pose.yaw, 0.0, 0.0});
  return res;
}

inline std::uint64_t episode_seed(std::uint64_t batch_seed, int index)
{
  return mix_seed(batch_seed, static_cast<std::uint64_t>(index));
}

/// Episodes run on `threads` workers; results are ordered by episode index.
inline std::vector<EpisodeResult> run_batch(
  const EpisodeSetup & setup, int episodes, std::uint64_t seed, int threads = 1,
  const std::function<FrameHook(int)> & hook_for = {})
{
  std::vector<EpisodeResult> out(static_cast<std::size_t>(episodes));
  auto work = [&](int worker, int stride) {
      for (int i = worker; i < episodes; i += stride) {
        out[static_cast<std::size_t>(i)] = run_episode(setup, episode_seed(seed, i), hook_for ? hook_for(i) : FrameHook{});
      }
    };
  threads = std::max(1, std::min(threads, episodes));
  if (threads == 1) {
    work(0, 1);
    return out;
  }
  std::vector<std::thread> pool;
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back(work, w, threads);
  }
  for (auto & th : pool) {
    th.join();
  }
  return out;
}

}  // namespace mim
