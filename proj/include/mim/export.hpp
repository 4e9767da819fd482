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
 * \file export.hpp
 * \brief Binary PGM/PPM images and CSV dumps of maps, clouds and trajectories.
 *
 * Image orientation: forward (+x) is up and +y (left) is left, so pixel
 * (row i, column j) shows cell (n-1-i, n-1-j).
 *
 * PGM pixel = round(255 * min(1, value / scale)); scale defaults to the
 * largest value in the layer, and an all-empty layer is black.
 *
 * PPM colour legend:
 *   free      (0, 0, 0)        black
 *   tp        (255, 255, 255)  white
 *   inflated  (128, 128, 128)  grey
 *   fp        (0, 255, 0)      green
 *   fn        (255, 255, 0)    yellow
 *   robot     (255, 105, 180)  pink, cell (n/2, n/2)
 *   goal      (0, 0, 255)      blue, when the goal lies on the map
 */

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mim/core_types.hpp"
#include "mim/inflation.hpp"
#include "mim/map_builder.hpp"
#include "mim/metrics.hpp"

namespace mim
{

using Rgb = std::array<std::uint8_t, 3>;

namespace colors
{
inline constexpr Rgb free{0, 0, 0};
inline constexpr Rgb tp{255, 255, 255};
inline constexpr Rgb inflated{128, 128, 128};
inline constexpr Rgb fp{0, 255, 0};
inline constexpr Rgb fn{255, 255, 0};
inline constexpr Rgb robot{255, 105, 180};
inline constexpr Rgb goal{0, 0, 255};
}  // namespace colors

inline Rgb class_color(PlanClass c)
{
  switch (c) {
    case PlanClass::free: return colors::free;
    case PlanClass::tp: return colors::tp;
    case PlanClass::inflated: return colors::inflated;
    case PlanClass::fp: return colors::fp;
    case PlanClass::fn: return colors::fn;
  }
  return colors::free;
}

/// 8-bit grey image bytes, P5 header included.
inline std::vector<std::uint8_t> encode_pgm(const Grid<double> & values, std::optional<double> scale = std::nullopt)
{
  const int n = values.n();
  double s = scale.value_or(0.0);
  if (!scale) {
    for (double v : values.data()) {
      s = std::max(s, v);
    }
  }
  if (scale && !(*scale > 0.0)) {
    throw std::invalid_argument("encode_pgm: scale must be positive");
  }
  const std::string header = "P5\n" + std::to_string(n) + " " + std::to_string(n) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + values.data().size());
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double v = values(n - 1 - i, n - 1 - j);
      const double frac = s > 0.0 ? std::clamp(v / s, 0.0, 1.0) : 0.0;
      out.push_back(static_cast<std::uint8_t>(std::lround(255.0 * frac)));
    }
  }
  return out;
}

inline Grid<double> layer_values(const LayerGrid & layer)
{
  Grid<double> v(layer.geometry(), 0.0);
  for (int r = 0; r < layer.n(); ++r) {
    for (int c = 0; c < layer.n(); ++c) {
      v(r, c) = layer.value(r, c);
    }
  }
  return v;
}

inline std::vector<std::uint8_t> encode_pgm(const LayerGrid & layer, std::optional<double> scale = std::nullopt)
{
  return encode_pgm(layer_values(layer), scale);
}

/// Colour-coded plan map, P6 header included.
inline std::vector<std::uint8_t> encode_ppm(const PlanMap & plan, std::optional<Vec2> goal = std::nullopt)
{
  const GridGeometry & geom = plan.geometry();
  const int n = geom.n();
  Grid<Rgb> img(geom, colors::free);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      img(r, c) = class_color(plan.cls(r, c));
    }
  }
  img(n / 2, n / 2) = colors::robot;
  if (goal) {
    if (auto idx = geom.world_to_cell(goal->x, goal->y)) {
      img[*idx] = colors::goal;
    }
  }
  const std::string header = "P6\n" + std::to_string(n) + " " + std::to_string(n) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + 3 * geom.cell_count());
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const Rgb & px = img(n - 1 - i, n - 1 - j);
      out.insert(out.end(), px.begin(), px.end());
    }
  }
  return out;
}

inline void write_bytes(const std::string & path, std::span<const std::uint8_t> bytes)
{
  std::ofstream f(path, std::ios::binary);
  if (!f) {
    throw std::runtime_error("cannot write " + path);
  }
  f.write(reinterpret_cast<const char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes)
{
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string trajectory_csv(const std::vector<TrajectoryRow> & rows)
{
  std::string out = "t,x,y,yaw,v,omega\n";
  char line[160];
  for (const auto & r : rows) {
    std::snprintf(line, sizeof(line), "%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n", r.t, r.x, r.y, r.yaw, r.v, r.omega);
    out += line;
  }
  return out;
}

inline std::string points_csv(std::span<const IntensityPoint> pts)
{
  std::string out = "x,y,z,intensity\n";
  char line[160];
  for (const auto & p : pts) {
    std::snprintf(line, sizeof(line), "%.6f,%.6f,%.6f,%.6f\n", p.x, p.y, p.z, p.intensity);
    out += line;
  }
  return out;
}

/// Occupied cells only: r, c, summed intensity, return count, value (sum / g^2).
inline std::string layer_csv(const LayerGrid & layer)
{
  std::string out = "r,c,sum,count,value\n";
  char line[160];
  for (int r = 0; r < layer.n(); ++r) {
    for (int c = 0; c < layer.n(); ++c) {
      if (!layer.occupied(r, c)) {
        continue;
      }
      std::snprintf(line, sizeof(line), "%d,%d,%.6f,%u,%.6f\n", r, c, layer.sum(r, c), layer.count(r, c), layer.value(r, c));
      out += line;
    }
  }
  return out;
}

inline void write_text(const std::string & path, const std::string & text)
{
  std::ofstream f(path, std::ios::binary);
  if (!f) {
    throw std::runtime_error("cannot write " + path);
  }
  f << text;
}

}  // namespace mim
