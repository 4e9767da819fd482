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
 * \file inflation.hpp
 * \brief Goal-direction kernels, binary dilation and plan-map assembly.
 *
 * Kernel offsets are (dr, dc) in grid units, dr along +x and dc along +y, so a
 * goal direction theta = atan2(g_y, g_x) is the kernel direction
 * (cos theta, sin theta) in (dr, dc).
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "mim/classifier.hpp"
#include "mim/core_types.hpp"
#include "mim/fn_tracker.hpp"

namespace mim
{

enum class InflationMode
{
  uniform,
  adaptive,
};

inline const char * to_string(InflationMode m)
{
  return m == InflationMode::uniform ? "uniform" : "adaptive";
}

inline InflationMode inflation_mode_from_string(const std::string & s)
{
  if (s == "uniform") {
    return InflationMode::uniform;
  }
  if (s == "adaptive") {
    return InflationMode::adaptive;
  }
  throw std::invalid_argument("unknown inflation mode '" + s + "' (expected adaptive|uniform)");
}

class InflationKernel
{
public:
  InflationKernel(int size, std::vector<std::uint8_t> mask, int padding, double theta)
  : size_(size), mask_(std::move(mask)), padding_(padding), theta_(theta)
  {
    if (size < 1 || size % 2 == 0) {
      throw std::invalid_argument("InflationKernel: size must be odd and positive");
    }
    if (mask_.size() != static_cast<std::size_t>(size) * static_cast<std::size_t>(size)) {
      throw std::invalid_argument("InflationKernel: mask size mismatch");
    }
  }

  int size() const {return size_;}
  int half() const {return (size_ - 1) / 2;}
  int padding() const {return padding_;}
  double theta() const {return theta_;}
  bool at(int i, int j) const {return mask_[static_cast<std::size_t>(i) * size_ + static_cast<std::size_t>(j)] != 0;}
  const std::vector<std::uint8_t> & mask() const {return mask_;}

  int popcount() const {return static_cast<int>(std::count(mask_.begin(), mask_.end(), std::uint8_t{1}));}

  struct Offset
  {
    int dr;
    int dc;
  };

  std::vector<Offset> offsets() const
  {
    std::vector<Offset> out;
    for (int i = 0; i < size_; ++i) {
      for (int j = 0; j < size_; ++j) {
        if (at(i, j)) {
          out.push_back({i - half(), j - half()});
        }
      }
    }
    return out;
  }

  static InflationKernel square(int size)
  {
    return InflationKernel(size, std::vector<std::uint8_t>(static_cast<std::size_t>(size) * size, 1), (size - 1) / 2, 0.0);
  }

private:
  int size_;
  std::vector<std::uint8_t> mask_;
  int padding_;
  double theta_;
};

/**
 * Line through the kernel centre along the goal direction, thickened
 * perpendicular to the line: a cell is set when its centre lies within
 * padding + 1/2 cells of the line. With `one_sided`, only the half pointing
 * away from the goal is kept (plus the centre band).
 */
inline InflationKernel build_kernel(double goal_x, double goal_y, int size, int padding, bool one_sided = false)
{
  if (goal_x == 0.0 && goal_y == 0.0) {
    throw std::invalid_argument("build_kernel: goal direction is the zero vector");
  }
  if (size < 1 || size % 2 == 0) {
    throw std::invalid_argument("build_kernel: size must be odd and positive");
  }
  if (padding < 0) {
    throw std::invalid_argument("build_kernel: padding must be non-negative");
  }
  const double theta = std::atan2(goal_y, goal_x);
  const double cs = std::cos(theta), sn = std::sin(theta);
  const int h = (size - 1) / 2;
  const double limit = padding + 0.5;
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(size) * size, 0);
  for (int i = 0; i < size; ++i) {
    for (int j = 0; j < size; ++j) {
      const double dr = i - h, dc = j - h;
      const double across = std::abs(dr * sn - dc * cs);
      const double along = dr * cs + dc * sn;
      if (across > limit + 1e-9) {
        continue;
      }
      if (one_sided && along > 0.5 + 1e-9) {
        continue;
      }
      mask[static_cast<std::size_t>(i) * size + j] = 1;
    }
  }
  return InflationKernel(size, std::move(mask), padding, theta);
}

/// Binary dilation of `support` by the kernel, anchored at the kernel centre.
inline BinaryGrid dilate(const BinaryGrid & support, const InflationKernel & kernel)
{
  const GridGeometry & geom = support.geometry();
  const int n = geom.n();
  const auto offs = kernel.offsets();
  BinaryGrid out(geom, 0);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      if (!support(r, c)) {
        continue;
      }
      for (const auto & o : offs) {
        const int rr = r + o.dr, cc = c + o.dc;
        if (geom.in_bounds(rr, cc)) {
          out(rr, cc) = 1;
        }
      }
    }
  }
  return out;
}

/// Support of solid detections plus remembered glass; passable cells never enter.
inline BinaryGrid solid_support(const Grid<double> & tp, const FNMap & fn)
{
  const GridGeometry & geom = tp.geometry();
  if (!(fn.geometry() == geom)) {
    throw std::invalid_argument("inflate: tp and fn geometry differ");
  }
  BinaryGrid s(geom, 0);
  const int n = geom.n();
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      s(r, c) = (tp(r, c) != 0.0 || fn.occupied(r, c)) ? 1 : 0;
    }
  }
  return s;
}

inline BinaryGrid inflate(const Grid<double> & tp, const FNMap & fn, const InflationKernel & kernel)
{
  return dilate(solid_support(tp, fn), kernel);
}

inline BinaryGrid inflate_uniform(const Grid<double> & tp, const FNMap & fn, int radius_cells)
{
  if (radius_cells < 0) {
    throw std::invalid_argument("inflate_uniform: radius must be non-negative");
  }
  return dilate(solid_support(tp, fn), InflationKernel::square(2 * radius_cells + 1));
}

enum class PlanClass : std::uint8_t
{
  free = 0,
  tp = 1,
  fp = 2,
  fn = 3,
  inflated = 4,    // blocking only because of inflation
};

struct PlanCosts
{
  std::uint8_t blocking{255};
  std::uint8_t fp_min{1};
  std::uint8_t fp_max{64};
  double fp_value_ref{255.0 * 8 / 0.01};   // value at which fp cost saturates

  std::uint8_t fp_cost(double value) const
  {
    const double frac = std::clamp(value / fp_value_ref, 0.0, 1.0);
    return static_cast<std::uint8_t>(std::lround(fp_min + frac * (fp_max - fp_min)));
  }
};

/// Planning grid: per-cell cost and class. Blocking cells cost `blocking`.
class PlanMap
{
public:
  PlanMap(GridGeometry geom, InflationMode mode, std::uint8_t blocking)
  : cost_(geom, 0), cls_(geom, PlanClass::free), mode_(mode), blocking_(blocking) {}

  const GridGeometry & geometry() const {return cost_.geometry();}
  std::uint8_t cost(int r, int c) const {return cost_(r, c);}
  PlanClass cls(int r, int c) const {return cls_(r, c);}
  bool blocking(int r, int c) const {return cost_(r, c) >= blocking_;}
  std::uint8_t blocking_cost() const {return blocking_;}
  InflationMode mode() const {return mode_;}

  void set(int r, int c, std::uint8_t cost, PlanClass cls)
  {
    cost_(r, c) = cost;
    cls_(r, c) = cls;
  }

  const Grid<std::uint8_t> & costs() const {return cost_;}
  const Grid<PlanClass> & classes() const {return cls_;}

private:
  Grid<std::uint8_t> cost_;
  Grid<PlanClass> cls_;
  InflationMode mode_;
  std::uint8_t blocking_;
};

/// Inflated cells block; passable cells outside the inflation carry a graded cost.
inline PlanMap assemble_plan(
  const BinaryGrid & inflated, const Grid<double> & fp, const PlanCosts & costs,
  const Grid<double> * tp = nullptr, const FNMap * fn = nullptr, InflationMode mode = InflationMode::adaptive)
{
  const GridGeometry & geom = inflated.geometry();
  if (!(fp.geometry() == geom) || (tp && !(tp->geometry() == geom)) || (fn && !(fn->geometry() == geom))) {
    throw std::invalid_argument("assemble_plan: geometry mismatch");
  }
  if (costs.fp_max >= costs.blocking || costs.fp_min > costs.fp_max) {
    throw std::invalid_argument("assemble_plan: need fp_min <= fp_max < blocking");
  }
  PlanMap plan(geom, mode, costs.blocking);
  const int n = geom.n();
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      if (inflated(r, c)) {
        PlanClass cls = PlanClass::inflated;
        if (tp && (*tp)(r, c) != 0.0) {
          cls = PlanClass::tp;
        } else if (fn && fn->occupied(r, c)) {
          cls = PlanClass::fn;
        }
        plan.set(r, c, costs.blocking, cls);
      } else if (fp(r, c) != 0.0) {
        plan.set(r, c, costs.fp_cost(fp(r, c)), PlanClass::fp);
      }
    }
  }
  return plan;
}

}  // namespace mim
