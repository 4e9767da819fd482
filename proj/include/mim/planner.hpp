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
 * \file planner.hpp
 * \brief Sampling-based local planner over a robot-centric PlanMap.
 *
 * Candidates (v, omega) come from the dynamic window around the current
 * velocity. Each is rolled out from the robot origin with constant command;
 * the trace is every cell the centre passes over, the start cell included. A
 * trace containing a blocking cell is inadmissible. Admissible candidates are
 * ranked by
 *
 *   J = w_obs * sum(cost) / C_block + w_head * heading_err / pi + w_vel * (v_max - v) / v_max
 *
 * with the weights normalised to sum to one.
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

#include "mim/core_types.hpp"
#include "mim/inflation.hpp"
#include "mim/lidar_sim.hpp"

namespace mim
{

struct PlannerParams
{
  double horizon{2.0};        // s
  double sim_dt{0.1};         // s between rollout poses
  int n_v{11};
  int n_omega{21};
  double w_obstacle{1.0};
  double w_heading{3.0};
  double w_velocity{1.0};
  double v_max{0.5};
  double omega_max{1.5};
  double accel_v{1.0};
  double accel_omega{3.0};
  double control_dt{0.1};     // window = current +- accel * control_dt
  double omega_recovery{0.75};
  int exit_prefix_cells{3};   // inflated cells a trace may start with when the robot stands in inflation

  void validate() const
  {
    if (!(horizon > 0.0 && sim_dt > 0.0 && sim_dt <= horizon)) {
      throw std::invalid_argument("PlannerParams: need 0 < sim_dt <= horizon");
    }
    if (exit_prefix_cells < 0) {
      throw std::invalid_argument("PlannerParams: exit_prefix_cells must be non-negative");
    }
    if (n_v < 1 || n_omega < 1) {
      throw std::invalid_argument("PlannerParams: sample counts must be positive");
    }
    if (w_obstacle < 0.0 || w_heading < 0.0 || w_velocity < 0.0 || w_obstacle + w_heading + w_velocity <= 0.0) {
      throw std::invalid_argument("PlannerParams: weights must be non-negative and not all zero");
    }
    if (!(v_max > 0.0 && omega_max > 0.0 && accel_v > 0.0 && accel_omega > 0.0 && control_dt > 0.0)) {
      throw std::invalid_argument("PlannerParams: limits must be positive");
    }
  }
};

struct VelocityWindow
{
  double v_lo, v_hi;
  double omega_lo, omega_hi;

  static VelocityWindow around(const Velocity & current, const PlannerParams & p)
  {
    VelocityWindow w{};
    w.v_lo = std::clamp(current.v - p.accel_v * p.control_dt, 0.0, p.v_max);
    w.v_hi = std::clamp(current.v + p.accel_v * p.control_dt, 0.0, p.v_max);
    w.omega_lo = std::clamp(current.omega - p.accel_omega * p.control_dt, -p.omega_max, p.omega_max);
    w.omega_hi = std::clamp(current.omega + p.accel_omega * p.control_dt, -p.omega_max, p.omega_max);
    return w;
  }

  /// Evenly spaced samples including both window edges, and always (0, 0).
  std::vector<Velocity> samples(int n_v, int n_omega) const
  {
    auto lin = [](double lo, double hi, int k) {
        std::vector<double> out;
        if (k == 1 || hi - lo < 1e-12) {
          out.push_back(k == 1 ? 0.5 * (lo + hi) : lo);
          return out;
        }
        for (int i = 0; i < k; ++i) {
          out.push_back(lo + (hi - lo) * i / (k - 1));
        }
        return out;
      };
    std::vector<Velocity> out;
    for (double v : lin(v_lo, v_hi, n_v)) {
      for (double w : lin(omega_lo, omega_hi, n_omega)) {
        out.push_back({v, w});
      }
    }
    out.push_back({0.0, 0.0});
    std::sort(out.begin(), out.end(), [](const Velocity & a, const Velocity & b) {
        return a.v < b.v || (a.v == b.v && a.omega < b.omega);
      });
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }
};

struct Rollout
{
  Velocity command;
  std::vector<Pose2D> poses;        // at sim_dt, 2 sim_dt, ..., horizon (robot frame)
  std::vector<CellIndex> trace;     // distinct cells in visiting order, start cell first
  bool leaves_map{false};
};

/// Constant-command rollout from the origin. The centre is sampled at most g/2 apart.
inline Rollout make_rollout(const Velocity & cmd, const GridGeometry & geom, const PlannerParams & p)
{
  Rollout ro;
  ro.command = cmd;
  const int steps = static_cast<int>(std::lround(p.horizon / p.sim_dt));
  const double seg_len = std::abs(cmd.v) * p.sim_dt;
  const int sub = std::max(1, static_cast<int>(std::ceil(seg_len / (0.5 * geom.g()))));
  RobotState st;
  auto visit = [&](double x, double y) {
      auto idx = geom.world_to_cell(x, y);
      if (!idx) {
        ro.leaves_map = true;
        return;
      }
      if (ro.trace.empty() || !(ro.trace.back() == *idx)) {
        if (std::find(ro.trace.begin(), ro.trace.end(), *idx) == ro.trace.end()) {
          ro.trace.push_back(*idx);
        }
      }
    };
  visit(0.0, 0.0);
  for (int k = 0; k < steps; ++k) {
    RobotState cur = st;
    for (int s = 1; s <= sub; ++s) {
      const RobotState mid = step_robot(st, cmd.v, cmd.omega, p.sim_dt * s / sub);
      visit(mid.pose.x, mid.pose.y);
      cur = mid;
    }
    st = cur;
    ro.poses.push_back(st.pose);
  }
  return ro;
}

/// Summed cost along the trace, or nullopt when any traced cell blocks.
inline std::optional<double> obstacle_cost(const Rollout & ro, const PlanMap & map)
{
  double sum = 0.0;
  for (const auto & idx : ro.trace) {
    if (map.blocking(idx.r, idx.c)) {
      return std::nullopt;
    }
    sum += map.cost(idx.r, idx.c);
  }
  return sum;
}

/// As obstacle_cost, but a leading run of at most `max_prefix` cells of class
/// inflated is tolerated (each costed as blocking) when the trace goes on to
/// leave it. Lets a robot standing in inflation drive out; TP and FN cells
/// are never tolerated.
inline std::optional<double> obstacle_cost_exiting(const Rollout & ro, const PlanMap & map, int max_prefix)
{
  double sum = 0.0;
  std::size_t i = 0;
  for (; i < ro.trace.size() && static_cast<int>(i) < max_prefix; ++i) {
    const auto & idx = ro.trace[i];
    if (map.cls(idx.r, idx.c) != PlanClass::inflated) {
      break;
    }
    sum += map.cost(idx.r, idx.c);
  }
  if (i == ro.trace.size()) {
    return std::nullopt;
  }
  for (; i < ro.trace.size(); ++i) {
    const auto & idx = ro.trace[i];
    if (map.blocking(idx.r, idx.c)) {
      return std::nullopt;
    }
    sum += map.cost(idx.r, idx.c);
  }
  return sum;
}

inline double heading_error(const Pose2D & end, const Vec2 & goal)
{
  const double dx = goal.x - end.x, dy = goal.y - end.y;
  if (std::hypot(dx, dy) < 1e-9) {
    return 0.0;
  }
  return std::abs(wrap_angle(std::atan2(dy, dx) - end.yaw));
}

struct ScoredRollout
{
  Rollout rollout;
  bool admissible{false};
  double obstacle{0.0};
  double heading{0.0};
  double score{std::numeric_limits<double>::infinity()};
};

struct PlanDecision
{
  Velocity command;
  bool recovery{false};
  std::optional<Rollout> chosen;    // empty in recovery
  bool exiting{false};              // robot stands in inflation; traces may start inside it
  int admissible_count{0};
  int candidate_count{0};
};

/// Caches rollouts; they depend only on the command, geometry and timing.
class DwaPlanner
{
public:
  DwaPlanner(GridGeometry geom, PlannerParams params)
  : geom_(geom), params_(params)
  {
    params_.validate();
  }

  const PlannerParams & params() const {return params_;}
  void set_weights(double w_obs, double w_head, double w_vel)
  {
    params_.w_obstacle = w_obs;
    params_.w_heading = w_head;
    params_.w_velocity = w_vel;
    params_.validate();
  }

  std::vector<ScoredRollout> score_all(const PlanMap & map, const Vec2 & goal, const Velocity & current) const
  {
    if (!(map.geometry() == geom_)) {
      throw std::invalid_argument("plan_step: map geometry differs from planner geometry");
    }
    const auto & p = params_;
    const double wsum = p.w_obstacle + p.w_heading + p.w_velocity;
    const double wo = p.w_obstacle / wsum, wh = p.w_heading / wsum, wv = p.w_velocity / wsum;
    std::vector<ScoredRollout> out;
    const bool exiting = standing_in_inflation(map);
    for (const Velocity & cmd : VelocityWindow::around(current, p).samples(p.n_v, p.n_omega)) {
      ScoredRollout s;
      s.rollout = make_rollout(cmd, geom_, p);
      const auto cost = exiting ? obstacle_cost_exiting(s.rollout, map, p.exit_prefix_cells) : obstacle_cost(s.rollout, map);
      s.admissible = cost.has_value();
      if (s.admissible) {
        s.obstacle = *cost;
        s.heading = heading_error(s.rollout.poses.back(), goal);
        s.score = wo * s.obstacle / map.blocking_cost() + wh * s.heading / std::numbers::pi +
          wv * (p.v_max - cmd.v) / p.v_max;
      }
      out.push_back(std::move(s));
    }
    return out;
  }

  /// True when the robot's own cell blocks only because of inflation and exits are enabled.
  bool standing_in_inflation(const PlanMap & map) const
  {
    const int mid = geom_.n() / 2;
    return params_.exit_prefix_cells > 0 && map.cls(mid, mid) == PlanClass::inflated && map.blocking(mid, mid);
  }

  PlanDecision plan_step(const PlanMap & map, const Vec2 & goal, const Velocity & current) const
  {
    auto scored = score_all(map, goal, current);
    PlanDecision d;
    d.exiting = standing_in_inflation(map);
    d.candidate_count = static_cast<int>(scored.size());
    const ScoredRollout * best = nullptr;
    for (const auto & s : scored) {
      if (!s.admissible) {
        continue;
      }
      ++d.admissible_count;
      if (!best || better(s, *best)) {
        best = &s;
      }
    }
    if (!best) {
      const double bearing = std::atan2(goal.y, goal.x);
      d.command = {0.0, bearing >= 0.0 ? params_.omega_recovery : -params_.omega_recovery};
      d.recovery = true;
      return d;
    }
    d.command = best->rollout.command;
    d.chosen = best->rollout;
    return d;
  }

private:
  /// Lower score wins; scores within a relative 1e-9 tie on higher v, then smaller |omega|, then smaller omega.
  static bool better(const ScoredRollout & a, const ScoredRollout & b)
  {
    const double tol = 1e-9 * std::max(1.0, std::max(std::abs(a.score), std::abs(b.score)));
    if (a.score < b.score - tol) {
      return true;
    }
    if (b.score < a.score - tol) {
      return false;
    }
    if (a.rollout.command.v != b.rollout.command.v) {
      return a.rollout.command.v > b.rollout.command.v;
    }
    const double aw = std::abs(a.rollout.command.omega), bw = std::abs(b.rollout.command.omega);
    if (aw != bw) {
      return aw < bw;
    }
    return a.rollout.command.omega < b.rollout.command.omega;
  }

  GridGeometry geom_;
  PlannerParams params_;
};

inline PlanDecision plan_step(
  const PlanMap & map, const Vec2 & goal, const Velocity & current, const PlannerParams & params)
{
  return DwaPlanner(map.geometry(), params).plan_step(map, goal, current);
}

struct EscapeParams
{
  bool enabled{true};
  int stall_frames{10};         // consecutive slow decisions that count as a stall
  double stall_speed{0.1};      // fraction of v_max at or below which a decision is slow
  double detour_distance{0.8};  // m from the robot to a detour sub-goal
  double detour_step_deg{10.0}; // angular search step away from the goal bearing
  double reach_tolerance{0.3};  // m, sub-goal counts as reached
  int max_detour_frames{80};

  void validate() const
  {
    if (stall_frames < 1 || stall_speed < 0.0 || stall_speed >= 1.0) {
      throw std::invalid_argument("EscapeParams: need stall_frames >= 1 and stall_speed in [0, 1)");
    }
    if (!(detour_distance > 0.0 && detour_step_deg > 0.0 && detour_step_deg <= 90.0 && reach_tolerance > 0.0) ||
      max_detour_frames < 1)
    {
      throw std::invalid_argument("EscapeParams: detour settings must be positive");
    }
  }
};

/// DWA plus a stall escape. The plain argmin crawls to a stop when an
/// obstacle sits on the goal line. After `stall_frames` consecutive decisions
/// at or below `stall_speed * v_max` (recovery included) the controller picks
/// the clear direction closest to the goal bearing, fixes a sub-goal
/// `detour_distance` along it in the world, and runs the same DWA toward that
/// sub-goal until it is reached, the detour times out, or it stalls again.
/// With no clear direction it turns in place toward the emptier side.
class LocalController
{
public:
  enum class Mode {track, detour};

  LocalController(GridGeometry geom, PlannerParams params, EscapeParams escape = {})
  : dwa_(geom, params), escape_(escape)
  {
    escape_.validate();
  }

  Mode mode() const {return mode_;}
  const DwaPlanner & planner() const {return dwa_;}
  std::optional<Vec2> subgoal() const {return mode_ == Mode::detour ? std::optional<Vec2>(subgoal_) : std::nullopt;}

  /// `goal` is in the robot frame, `pose` the robot's world pose. `escaping`
  /// is set when the command serves a detour rather than the goal itself.
  PlanDecision step(const PlanMap & map, const Vec2 & goal, const Velocity & current, const Pose2D & pose,
    bool * escaping = nullptr)
  {
    const auto & p = dwa_.params();
    if (mode_ == Mode::detour) {
      const Vec2 sg = world_to_robot(pose, subgoal_.x, subgoal_.y);
      ++detour_frames_;
      if (std::hypot(sg.x, sg.y) <= escape_.reach_tolerance || detour_frames_ > escape_.max_detour_frames) {
        mode_ = Mode::track;
        stall_ = 0;
      }
    }
    const Vec2 target = mode_ == Mode::detour ? world_to_robot(pose, subgoal_.x, subgoal_.y) : goal;
    PlanDecision d = dwa_.plan_step(map, target, current);
    const bool slow = d.command.v <= escape_.stall_speed * p.v_max;
    stall_ = (escape_.enabled && slow) ? stall_ + 1 : 0;
    if (stall_ >= escape_.stall_frames) {
      stall_ = 0;
      if (auto dir = detour_direction(map, goal)) {
        mode_ = Mode::detour;
        detour_frames_ = 0;
        const double th = pose.yaw + *dir;
        subgoal_ = {pose.x + escape_.detour_distance * std::cos(th), pose.y + escape_.detour_distance * std::sin(th)};
        d = dwa_.plan_step(map, world_to_robot(pose, subgoal_.x, subgoal_.y), current);
      } else if (!d.recovery) {
        d.command = {0.0, turn_side(map, goal) * p.omega_recovery};
        d.chosen.reset();
        d.recovery = true;
      }
    }
    if (escaping) {
      *escaping = mode_ == Mode::detour;
    }
    return d;
  }

  /// Robot-frame bearing of the clear ray closest to the goal bearing, searched
  /// in `detour_step_deg` steps on both sides (the emptier side first on ties).
  /// The goal bearing itself is skipped: it is where the robot stalled.
  std::optional<double> detour_direction(const PlanMap & map, const Vec2 & goal) const
  {
    const double base = std::atan2(goal.y, goal.x);
    const double step = escape_.detour_step_deg * std::numbers::pi / 180.0;
    const double first = turn_side(map, goal);
    const int k_max = static_cast<int>(std::floor(std::numbers::pi / step + 1e-9));
    for (int k = 1; k <= k_max; ++k) {
      for (double side : {first, -first}) {
        const double th = wrap_angle(base + side * k * step);
        if (ray_clear(map, th)) {
          return th;
        }
      }
    }
    return std::nullopt;
  }

  /// No blocking cell along the ray, except a leading run of inflated cells
  /// when the robot stands in inflation.
  bool ray_clear(const PlanMap & map, double theta) const
  {
    const GridGeometry & geom = map.geometry();
    const double ds = 0.5 * geom.g();
    const int steps = static_cast<int>(std::ceil(escape_.detour_distance / ds));
    bool in_prefix = dwa_.standing_in_inflation(map);
    int prefix_cells = 0;
    std::optional<CellIndex> last;
    for (int i = 0; i <= steps; ++i) {
      const double s = i * ds;
      const auto idx = geom.world_to_cell(s * std::cos(theta), s * std::sin(theta));
      if (!idx) {
        return true;
      }
      const bool fresh = !last || !(*last == *idx);
      last = idx;
      if (!map.blocking(idx->r, idx->c)) {
        in_prefix = false;
        continue;
      }
      if (in_prefix && map.cls(idx->r, idx->c) == PlanClass::inflated) {
        prefix_cells += fresh ? 1 : 0;
        if (prefix_cells <= dwa_.params().exit_prefix_cells) {
          continue;
        }
      }
      return false;
    }
    return true;
  }

private:
  /// +1 (left) or -1: the side with fewer blocking cells within the detour distance ahead, else toward the goal.
  double turn_side(const PlanMap & map, const Vec2 & goal) const
  {
    const GridGeometry & geom = map.geometry();
    const int reach = static_cast<int>(std::ceil(escape_.detour_distance / geom.g()));
    const int mid = geom.n() / 2;
    int left = 0, right = 0;
    for (int r = mid; r < std::min(geom.n(), mid + reach + 1); ++r) {
      for (int c = std::max(0, mid - reach); c < std::min(geom.n(), mid + reach + 1); ++c) {
        if (!map.blocking(r, c)) {
          continue;
        }
        const auto q = geom.cell_center(r, c);
        if (std::hypot(q.x_low, q.y_low) > escape_.detour_distance) {
          continue;
        }
        (q.y_low >= 0.0 ? left : right) += 1;
      }
    }
    if (left != right) {
      return left < right ? 1.0 : -1.0;
    }
    return std::atan2(goal.y, goal.x) >= 0.0 ? 1.0 : -1.0;
  }

  DwaPlanner dwa_;
  EscapeParams escape_;
  Mode mode_{Mode::track};
  int stall_{0};
  int detour_frames_{0};
  Vec2 subgoal_{};
};

}  // namespace mim
