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
 * \file fn_tracker.hpp
 * \brief Transparent-obstacle (glass) memory.
 *
 * Glass only returns weak points for near-horizontal rays, so it shows up in
 * the ground layer but not in the layer just below it. Those cells are kept
 * in a robot-frame map that is carried across frames by the robot's motion,
 * and straight runs of evidence are extended into wall segments.
 *
 * Each occupied cell remembers the continuous robot-frame point it stands
 * for. Carrying the map forward moves that point exactly and re-bins it, so
 * repeated motion does not accumulate rounding drift.
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "mim/classifier.hpp"
#include "mim/core_types.hpp"
#include "mim/lidar_sim.hpp"
#include "mim/map_builder.hpp"

namespace mim
{

struct FnParams
{
  double gamma{127.5};              // low-intensity gate on ground-layer mean
  int probe_clearance_cells{1};     // veto layers must be empty within this Chebyshev radius
  bool all_layers_negative{true};   // above and below layers veto evidence too
  double extension_m{1.0};          // segment end extension
  double inlier_tolerance_cells{1.0};
  int min_inliers{3};
  double max_gap_m{0.5};            // larger gaps between inliers split a segment
  double mark_halfwidth_cells{0.75};
  int max_lines{8};
  int ransac_iterations{64};
  std::uint64_t seed{7};
};

struct FnCell
{
  bool occupied{false};
  bool observed{false};     // direct evidence (true) or extrapolated (false)
  std::uint32_t age{0};     // frames since last observation or creation
  double px{0.0};           // robot-frame point the cell stands for
  double py{0.0};
};

class FNMap
{
public:
  explicit FNMap(GridGeometry geom)
  : cells_(geom) {}

  const GridGeometry & geometry() const {return cells_.geometry();}
  const FnCell & at(int r, int c) const {return cells_(r, c);}
  FnCell & at(int r, int c) {return cells_(r, c);}
  bool occupied(int r, int c) const {return cells_(r, c).occupied;}

  std::size_t count() const
  {
    return static_cast<std::size_t>(std::count_if(cells_.data().begin(), cells_.data().end(),
           [](const FnCell & c) {return c.occupied;}));
  }

  BinaryGrid support() const
  {
    BinaryGrid out(geometry(), 0);
    for (std::size_t i = 0; i < cells_.data().size(); ++i) {
      out.data()[i] = cells_.data()[i].occupied ? 1 : 0;
    }
    return out;
  }

  /// Place a point; an occupied cell keeps observed evidence over extrapolation, then the older entry.
  void insert(CellIndex idx, const FnCell & cell)
  {
    FnCell & dst = cells_[idx];
    if (!dst.occupied) {
      dst = cell;
      return;
    }
    const bool take = (cell.observed && !dst.observed) || (cell.observed == dst.observed && cell.age > dst.age);
    if (take) {
      dst = cell;
    }
  }

private:
  Grid<FnCell> cells_;
};

/// Planar rigid motion from the robot frame at t to the robot frame at t+1,
/// expressed in the frame at t.
struct MotionDelta
{
  double dx{0.0};
  double dy{0.0};
  double dyaw{0.0};

  static MotionDelta between(const Pose2D & from, const Pose2D & to)
  {
    const Vec2 d = world_to_robot(from, to.x, to.y);
    return {d.x, d.y, wrap_angle(to.yaw - from.yaw)};
  }

  MotionDelta inverse() const
  {
    const double cs = std::cos(dyaw), sn = std::sin(dyaw);
    // -R(-dyaw) d
    return {-(cs * dx + sn * dy), -(-sn * dx + cs * dy), -dyaw};
  }

  /// A point fixed in the world, re-expressed in the new frame.
  Vec2 apply(double px, double py) const
  {
    const double cs = std::cos(dyaw), sn = std::sin(dyaw);
    const double qx = px - dx, qy = py - dy;
    return {cs * qx + sn * qy, -sn * qx + cs * qy};
  }
};

/// Cells with weak ground-layer returns and nothing in any `negatives` layer nearby.
inline BinaryGrid glass_difference(
  const LayerGrid & ground, std::span<const LayerGrid * const> negatives, const FnParams & params)
{
  const GridGeometry & geom = ground.geometry();
  for (const LayerGrid * l : negatives) {
    if (!(l->geometry() == geom)) {
      throw std::invalid_argument("glass_difference: layers must share geometry");
    }
  }
  const int n = geom.n();
  const int rad = std::max(0, params.probe_clearance_cells);
  BinaryGrid out(geom, 0);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      if (!ground.occupied(r, c) || ground.mean(r, c) > params.gamma) {
        continue;
      }
      bool seen = false;
      for (int dr = -rad; dr <= rad && !seen; ++dr) {
        for (int dc = -rad; dc <= rad && !seen; ++dc) {
          if (!geom.in_bounds(r + dr, c + dc)) {
            continue;
          }
          for (const LayerGrid * l : negatives) {
            if (l->occupied(r + dr, c + dc)) {
              seen = true;
              break;
            }
          }
        }
      }
      if (!seen) {
        out(r, c) = 1;
      }
    }
  }
  return out;
}

/// Cells with weak ground-layer returns and nothing in the probe layer nearby.
inline BinaryGrid glass_difference(const LayerGrid & ground, const LayerGrid & probe, const FnParams & params)
{
  const LayerGrid * neg[] = {&probe};
  return glass_difference(ground, neg, params);
}

/// Glass evidence from a standard stack; with `params.all_layers_negative` the
/// above and below layers veto a cell as well as the probe layer.
inline BinaryGrid glass_difference(const MultiLayerMap & layers, const FnParams & params)
{
  const LayerGrid & ground = layers.layer(LayerRole::ground);
  if (!params.all_layers_negative) {
    return glass_difference(ground, layers.layer(LayerRole::glass_probe), params);
  }
  const LayerGrid * neg[] = {
    &layers.layer(LayerRole::glass_probe), &layers.layer(LayerRole::above), &layers.layer(LayerRole::below)};
  return glass_difference(ground, neg, params);
}

/// Carry the map into the next robot frame; cells leaving the extent are dropped.
inline FNMap transform_fn(const FNMap & prev, const MotionDelta & delta)
{
  if (!std::isfinite(delta.dx) || !std::isfinite(delta.dy) || !std::isfinite(delta.dyaw)) {
    throw std::invalid_argument("transform_fn: non-finite motion");
  }
  const GridGeometry & geom = prev.geometry();
  FNMap out(geom);
  const int n = geom.n();
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const FnCell & cell = prev.at(r, c);
      if (!cell.occupied) {
        continue;
      }
      const Vec2 q = delta.apply(cell.px, cell.py);
      if (auto idx = geom.world_to_cell(q.x, q.y)) {
        FnCell moved = cell;
        moved.px = q.x;
        moved.py = q.y;
        moved.age = cell.age + 1;
        out.insert(*idx, moved);
      }
    }
  }
  return out;
}

/// A fitted wall segment in the robot frame: p(s) = origin + s * dir, s in [s0, s1].
struct FnSegment
{
  double ox, oy;
  double dir_x, dir_y;
  double s0, s1;
  int inliers;
};

namespace detail
{

struct Pt
{
  double x, y;
};

inline std::vector<FnSegment> fit_segments(std::vector<Pt> pts, const GridGeometry & geom, const FnParams & params)
{
  std::vector<FnSegment> segments;
  const double tol = params.inlier_tolerance_cells * geom.g();
  SplitMix64 rng(mix_seed(params.seed, pts.size()));

  for (int line = 0; line < params.max_lines && static_cast<int>(pts.size()) >= params.min_inliers; ++line) {
    std::uniform_int_distribution<std::size_t> pick(0, pts.size() - 1);
    int best_count = 0;
    double bx = 0, by = 0, bdx = 1, bdy = 0;
    for (int it = 0; it < params.ransac_iterations; ++it) {
      const std::size_t i = pick(rng);
      const std::size_t j = pick(rng);
      const double ex = pts[j].x - pts[i].x, ey = pts[j].y - pts[i].y;
      const double len = std::hypot(ex, ey);
      if (i == j || len < 0.5 * geom.g()) {
        continue;
      }
      const double ux = ex / len, uy = ey / len;
      int cnt = 0;
      for (const auto & p : pts) {
        if (std::abs((p.x - pts[i].x) * uy - (p.y - pts[i].y) * ux) <= tol) {
          ++cnt;
        }
      }
      if (cnt > best_count) {
        best_count = cnt;
        bx = pts[i].x;
        by = pts[i].y;
        bdx = ux;
        bdy = uy;
      }
    }
    if (best_count < params.min_inliers) {
      break;
    }

    // Total least squares on the inliers.
    std::vector<Pt> in;
    std::vector<Pt> rest;
    for (const auto & p : pts) {
      if (std::abs((p.x - bx) * bdy - (p.y - by) * bdx) <= tol) {
        in.push_back(p);
      } else {
        rest.push_back(p);
      }
    }
    double mx = 0, my = 0;
    for (const auto & p : in) {
      mx += p.x;
      my += p.y;
    }
    mx /= in.size();
    my /= in.size();
    double sxx = 0, sxy = 0, syy = 0;
    for (const auto & p : in) {
      sxx += (p.x - mx) * (p.x - mx);
      sxy += (p.x - mx) * (p.y - my);
      syy += (p.y - my) * (p.y - my);
    }
    const double angle = 0.5 * std::atan2(2.0 * sxy, sxx - syy);
    const double ux = std::cos(angle), uy = std::sin(angle);

    std::vector<double> s;
    s.reserve(in.size());
    for (const auto & p : in) {
      s.push_back((p.x - mx) * ux + (p.y - my) * uy);
    }
    std::sort(s.begin(), s.end());
    std::size_t run_start = 0;
    for (std::size_t k = 1; k <= s.size(); ++k) {
      if (k == s.size() || s[k] - s[k - 1] > params.max_gap_m) {
        const int members = static_cast<int>(k - run_start);
        if (members >= params.min_inliers) {
          segments.push_back({mx, my, ux, uy, s[run_start], s[k - 1], members});
        }
        run_start = k;
      }
    }
    pts = std::move(rest);
  }
  return segments;
}

}  // namespace detail

/// Least-squares wall segments through observed evidence (before extension).
inline std::vector<FnSegment> fit_fn_segments(const FNMap & map, const FnParams & params)
{
  std::vector<detail::Pt> pts;
  const int n = map.geometry().n();
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const FnCell & cell = map.at(r, c);
      if (cell.occupied && cell.observed) {
        pts.push_back({cell.px, cell.py});
      }
    }
  }
  return detail::fit_segments(std::move(pts), map.geometry(), params);
}

/**
 * Union of fresh evidence with the carried map, then segment extrapolation.
 *
 * Segments are fitted to observed cells only, so extrapolated cells never
 * feed later fits. Each end is extended by `extension_m`; an extension stops
 * at the first step whose cell or 8-neighbour is flagged in `stop_mask`, which
 * is where the pane meets a solid frame or pillar.
 */
inline FNMap accumulate_fn(
  const BinaryGrid & evidence, const FNMap & transformed_prev, const FnParams & params,
  const BinaryGrid * stop_mask = nullptr)
{
  const GridGeometry & geom = transformed_prev.geometry();
  if (!(evidence.geometry() == geom) || (stop_mask && !(stop_mask->geometry() == geom))) {
    throw std::invalid_argument("accumulate_fn: geometry mismatch");
  }
  FNMap out = transformed_prev;
  const int n = geom.n();
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      if (!evidence(r, c)) {
        continue;
      }
      FnCell & cell = out.at(r, c);
      const auto ctr = geom.cell_center(r, c);
      if (!cell.occupied || !cell.observed) {
        cell = FnCell{true, true, 0, ctr.x_low, ctr.y_low};
      } else {
        cell.age = 0;
      }
    }
  }

  const double g = geom.g();
  const double step = 0.5 * g;
  auto stopped = [&](double x, double y) {
      if (!stop_mask) {
        return false;
      }
      auto idx = geom.world_to_cell(x, y);
      if (!idx) {
        return false;
      }
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          if (geom.in_bounds(idx->r + dr, idx->c + dc) && (*stop_mask)(idx->r + dr, idx->c + dc)) {
            return true;
          }
        }
      }
      return false;
    };

  for (const FnSegment & seg : fit_fn_segments(out, params)) {
    auto extend = [&](double s_edge, double sign) {
        double reached = s_edge;
        for (double d = step; d <= params.extension_m + 1e-9; d += step) {
          const double s = s_edge + sign * d;
          reached = s;
          if (stopped(seg.ox + s * seg.dir_x, seg.oy + s * seg.dir_y)) {
            break;
          }
        }
        return reached;
      };
    const double s0 = extend(seg.s0, -1.0);
    const double s1 = extend(seg.s1, +1.0);

    const double ax = seg.ox + s0 * seg.dir_x, ay = seg.oy + s0 * seg.dir_y;
    const double bx = seg.ox + s1 * seg.dir_x, by = seg.oy + s1 * seg.dir_y;
    const double w = params.mark_halfwidth_cells * g;
    const int half = n / 2;
    auto index_of = [&](double v) {
        return std::clamp(static_cast<int>(std::floor(v / g)) + half, 0, n - 1);
      };
    const int r_lo = index_of(std::min(ax, bx) - w), r_hi = index_of(std::max(ax, bx) + w);
    const int c_lo = index_of(std::min(ay, by) - w), c_hi = index_of(std::max(ay, by) + w);
    for (int r = r_lo; r <= r_hi; ++r) {
      for (int c = c_lo; c <= c_hi; ++c) {
        const auto ctr = geom.cell_center(r, c);
        const double s = std::clamp((ctr.x_low - seg.ox) * seg.dir_x + (ctr.y_low - seg.oy) * seg.dir_y, s0, s1);
        const double dist = std::hypot(ctr.x_low - (seg.ox + s * seg.dir_x), ctr.y_low - (seg.oy + s * seg.dir_y));
        if (dist <= w && !out.occupied(r, c)) {
          out.at(r, c) = FnCell{true, false, 0, ctr.x_low, ctr.y_low};
        }
      }
    }
  }
  return out;
}

/// Owns the glass memory for one robot; updated once per frame.
class FnTracker
{
public:
  FnTracker(GridGeometry geom, FnParams params)
  : map_(geom), params_(params) {}

  /// `delta` is the motion since the previous update; `solid` marks cells that stop extensions.
  const FNMap & update(const MultiLayerMap & layers, const MotionDelta & delta, const BinaryGrid * solid = nullptr)
  {
    FNMap carried = transform_fn(map_, delta);
    const BinaryGrid evidence = glass_difference(layers, params_);
    map_ = accumulate_fn(evidence, carried, params_, solid);
    return map_;
  }

  const FNMap & map() const {return map_;}
  FNMap snapshot() const {return map_;}
  const FnParams & params() const {return params_;}
  void reset() {map_ = FNMap(map_.geometry());}

private:
  FNMap map_;
  FnParams params_;
};

}  // namespace mim
