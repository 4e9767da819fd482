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
 * \file core_types.hpp
 * \brief Geometry, frame conventions and grid index math shared by every module.
 *
 * Frames: x forward, y left, z up. A robot-centric grid has n x n cells of
 * edge g; the robot sits at the corner shared by cells (n/2 - 1, n/2 - 1) and
 * (n/2, n/2), so cell (n/2, n/2) spans [0, g) x [0, g). Row r grows with +x,
 * column c grows with +y. Cell extents are half-open; the map covers the open
 * square |x|, |y| < n*g/2.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mim
{

/// One reflected return in the sensor frame.
struct IntensityPoint
{
  double x{0.0};
  double y{0.0};
  double z{0.0};
  double intensity{0.0};

  friend bool operator==(const IntensityPoint &, const IntensityPoint &) = default;
};

struct CellIndex
{
  int r{0};
  int c{0};

  friend bool operator==(const CellIndex &, const CellIndex &) = default;
  friend auto operator<=>(const CellIndex &, const CellIndex &) = default;
};

/// Square robot-centric grid: n cells per side, each g meters wide.
class GridGeometry
{
public:
  GridGeometry(int n, double g)
  : n_(n), g_(g)
  {
    if (n < 2 || n % 2 != 0) {
      throw std::invalid_argument("GridGeometry: n must be even and >= 2, got " + std::to_string(n));
    }
    if (!(g > 0.0) || !std::isfinite(g)) {
      throw std::invalid_argument("GridGeometry: cell size must be positive");
    }
  }

  int n() const {return n_;}
  double g() const {return g_;}
  double half_extent() const {return 0.5 * n_ * g_;}
  std::size_t cell_count() const {return static_cast<std::size_t>(n_) * static_cast<std::size_t>(n_);}

  bool in_bounds(int r, int c) const {return r >= 0 && c >= 0 && r < n_ && c < n_;}
  bool in_bounds(CellIndex idx) const {return in_bounds(idx.r, idx.c);}

  std::size_t flat(int r, int c) const
  {
    return static_cast<std::size_t>(r) * static_cast<std::size_t>(n_) + static_cast<std::size_t>(c);
  }
  std::size_t flat(CellIndex idx) const {return flat(idx.r, idx.c);}
  CellIndex unflat(std::size_t i) const
  {
    return {static_cast<int>(i / static_cast<std::size_t>(n_)), static_cast<int>(i % static_cast<std::size_t>(n_))};
  }

  /// Cell containing (x, y), or nullopt when the point lies outside the map.
  std::optional<CellIndex> world_to_cell(double x, double y) const
  {
    if (!std::isfinite(x) || !std::isfinite(y)) {
      return std::nullopt;
    }
    const double h = half_extent();
    if (std::abs(x) >= h || std::abs(y) >= h) {
      return std::nullopt;
    }
    const int half = n_ / 2;
    // Snap to the edges cell_to_world reports: the quotient may round across one.
    auto axis = [&](double v) {
        int k = static_cast<int>(std::floor(v / g_));
        if (v < k * g_) {
          --k;
        } else if (v >= (k + 1) * g_) {
          ++k;
        }
        return std::clamp(k + half, 0, n_ - 1);
      };
    const int r = axis(x);
    const int c = axis(y);
    return CellIndex{r, c};
  }

  struct Corner
  {
    double x_low;
    double y_low;
  };

  /// Lower corner of the cell's world extent.
  Corner cell_to_world(int r, int c) const
  {
    if (!in_bounds(r, c)) {
      throw std::out_of_range("cell_to_world: (" + std::to_string(r) + ", " + std::to_string(c) + ") outside grid");
    }
    const int half = n_ / 2;
    return {(r - half) * g_, (c - half) * g_};
  }

  Corner cell_center(int r, int c) const
  {
    auto low = cell_to_world(r, c);
    return {low.x_low + 0.5 * g_, low.y_low + 0.5 * g_};
  }

  friend bool operator==(const GridGeometry &, const GridGeometry &) = default;

private:
  int n_;
  double g_;
};

/// Dense n x n storage, row-major.
template<typename T>
class Grid
{
public:
  explicit Grid(GridGeometry geom, T fill = T{})
  : geom_(geom), data_(geom.cell_count(), fill) {}

  const GridGeometry & geometry() const {return geom_;}
  int n() const {return geom_.n();}

  T & operator()(int r, int c) {return data_[geom_.flat(r, c)];}
  const T & operator()(int r, int c) const {return data_[geom_.flat(r, c)];}
  T & operator[](CellIndex idx) {return data_[geom_.flat(idx)];}
  const T & operator[](CellIndex idx) const {return data_[geom_.flat(idx)];}

  std::vector<T> & data() {return data_;}
  const std::vector<T> & data() const {return data_;}

  void fill(T value) {std::fill(data_.begin(), data_.end(), value);}

  friend bool operator==(const Grid &, const Grid &) = default;

private:
  GridGeometry geom_;
  std::vector<T> data_;
};

using BinaryGrid = Grid<std::uint8_t>;

/// Closed height interval [low, high], optionally open at either end.
struct HeightInterval
{
  double low{0.0};
  double high{0.0};
  bool low_open{false};
  bool high_open{false};

  static HeightInterval closed(double lo, double hi) {return make(lo, hi, false, false);}
  static HeightInterval half_open(double lo, double hi) {return make(lo, hi, false, true);}
  static HeightInterval open_closed(double lo, double hi) {return make(lo, hi, true, false);}

  static HeightInterval make(double lo, double hi, bool lo_open, bool hi_open)
  {
    if (!(lo <= hi)) {
      throw std::invalid_argument("HeightInterval: low must not exceed high");
    }
    return {lo, hi, lo_open, hi_open};
  }

  bool contains(double z) const
  {
    const bool above_low = low_open ? z > low : z >= low;
    const bool below_high = high_open ? z < high : z <= high;
    return above_low && below_high;
  }

  /// True when some z belongs to both intervals.
  bool overlaps(const HeightInterval & o) const
  {
    const HeightInterval * a = this;
    const HeightInterval * b = &o;
    if (b->low < a->low || (b->low == a->low && !b->low_open && a->low_open)) {
      std::swap(a, b);
    }
    // a starts no later than b
    if (b->low < a->high) {
      return true;
    }
    if (b->low == a->high) {
      return !b->low_open && !a->high_open;
    }
    return false;
  }

  friend bool operator==(const HeightInterval &, const HeightInterval &) = default;
};

inline double wrap_angle(double a)
{
  constexpr double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a + std::numbers::pi, two_pi);
  if (a <= 0.0) {
    a += two_pi;
  }
  return a - std::numbers::pi;   // (-pi, pi]
}

struct Pose2D
{
  double x{0.0};
  double y{0.0};
  double yaw{0.0};

  friend bool operator==(const Pose2D &, const Pose2D &) = default;
};

struct Velocity
{
  double v{0.0};
  double omega{0.0};

  friend bool operator==(const Velocity &, const Velocity &) = default;
};

struct Vec2
{
  double x{0.0};
  double y{0.0};
};

/// Express a world point in the robot frame at `pose`.
inline Vec2 world_to_robot(const Pose2D & pose, double wx, double wy)
{
  const double dx = wx - pose.x;
  const double dy = wy - pose.y;
  const double cs = std::cos(pose.yaw);
  const double sn = std::sin(pose.yaw);
  return {cs * dx + sn * dy, -sn * dx + cs * dy};
}

inline Vec2 robot_to_world(const Pose2D & pose, double rx, double ry)
{
  const double cs = std::cos(pose.yaw);
  const double sn = std::sin(pose.yaw);
  return {pose.x + cs * rx - sn * ry, pose.y + sn * rx + cs * ry};
}

/// World pose and velocity plus the goal in world coordinates.
struct RobotState
{
  Pose2D pose;
  Velocity velocity;
  Vec2 goal_world;

  /// Goal expressed in the robot frame (g_x, g_y).
  Vec2 goal_robot() const {return world_to_robot(pose, goal_world.x, goal_world.y);}
};

}  // namespace mim
