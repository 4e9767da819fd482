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
 * \file map_builder.hpp
 * \brief Per-height-interval intensity layers and their stack.
 *
 * A layer cell holds the summed intensity of the points binned into it and
 * the point count. `value()` is the summed intensity divided by the cell area
 * (the planning quantity); `mean()` is the per-return mean intensity (the
 * quantity thresholds are expressed in).
 */

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mim/core_types.hpp"

namespace mim
{

class LayerGrid
{
public:
  LayerGrid(GridGeometry geom, HeightInterval interval)
  : interval_(interval), sum_(geom, 0.0), count_(geom, 0u) {}

  const GridGeometry & geometry() const {return sum_.geometry();}
  const HeightInterval & interval() const {return interval_;}
  int n() const {return sum_.n();}

  void add(CellIndex idx, double intensity)
  {
    sum_[idx] += intensity;
    count_[idx] += 1;
  }

  double sum(int r, int c) const {return sum_(r, c);}
  std::uint32_t count(int r, int c) const {return count_(r, c);}
  bool occupied(int r, int c) const {return count_(r, c) > 0;}

  /// Summed intensity over the cell area.
  double value(int r, int c) const
  {
    const double g = geometry().g();
    return sum_(r, c) / (g * g);
  }

  /// Mean intensity of the returns in the cell; 0 when empty.
  double mean(int r, int c) const
  {
    const auto k = count_(r, c);
    return k == 0 ? 0.0 : sum_(r, c) / static_cast<double>(k);
  }

  const Grid<double> & sums() const {return sum_;}
  const Grid<std::uint32_t> & counts() const {return count_;}

private:
  HeightInterval interval_;
  Grid<double> sum_;
  Grid<std::uint32_t> count_;
};

inline LayerGrid build_layer(std::span<const IntensityPoint> points, const HeightInterval & interval, const GridGeometry & geom)
{
  LayerGrid layer(geom, interval);
  for (const auto & p : points) {
    if (!interval.contains(p.z)) {
      continue;
    }
    if (auto idx = geom.world_to_cell(p.x, p.y)) {
      layer.add(*idx, p.intensity);
    }
  }
  return layer;
}

enum class LayerRole
{
  below,
  above,
  ground,
  glass_probe,
};

/// Heights of the four standard layers, relative to the sensor plane.
///
///   below       [-h, -eps - band)
///   glass_probe [-eps - band, -eps + band)
///   ground      [-band, band]
///   above       (band, h]
///
/// Points in [-eps + band, -band) fall in no layer.
struct LayerSpec
{
  double h{0.6};
  double epsilon{0.15};
  double band{0.05};

  void validate() const
  {
    if (!(h > 0.0 && epsilon > 0.0 && band > 0.0)) {
      throw std::invalid_argument("LayerSpec: h, epsilon and band must be positive");
    }
    if (epsilon - band < band) {
      throw std::invalid_argument("LayerSpec: glass probe band overlaps ground band (need epsilon >= 2 * band)");
    }
    if (h <= epsilon + band) {
      throw std::invalid_argument("LayerSpec: h must exceed epsilon + band");
    }
  }

  HeightInterval interval(LayerRole role) const
  {
    switch (role) {
      case LayerRole::below: return HeightInterval::half_open(-h, -epsilon - band);
      case LayerRole::above: return HeightInterval::open_closed(band, h);
      case LayerRole::ground: return HeightInterval::closed(-band, band);
      case LayerRole::glass_probe: return HeightInterval::half_open(-epsilon - band, -epsilon + band);
    }
    throw std::logic_error("unknown layer role");
  }

  static constexpr std::array<LayerRole, 4> roles{LayerRole::below, LayerRole::above, LayerRole::ground, LayerRole::glass_probe};
};

inline const char * to_string(LayerRole role)
{
  switch (role) {
    case LayerRole::below: return "below";
    case LayerRole::above: return "above";
    case LayerRole::ground: return "ground";
    case LayerRole::glass_probe: return "glass_probe";
  }
  return "?";
}

/// Ordered stack of layers over one geometry; intervals pairwise disjoint.
class MultiLayerMap
{
public:
  MultiLayerMap(std::vector<LayerGrid> layers, double timestamp = 0.0)
  : layers_(std::move(layers)), timestamp_(timestamp)
  {
    if (layers_.empty()) {
      throw std::invalid_argument("MultiLayerMap: need at least one layer");
    }
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      if (!(layers_[i].geometry() == layers_[0].geometry())) {
        throw std::invalid_argument("MultiLayerMap: layers must share geometry");
      }
      for (std::size_t j = 0; j < i; ++j) {
        if (layers_[i].interval().overlaps(layers_[j].interval())) {
          throw std::invalid_argument("MultiLayerMap: height intervals " + std::to_string(j) + " and " +
                  std::to_string(i) + " overlap");
        }
      }
    }
  }

  std::size_t size() const {return layers_.size();}
  const LayerGrid & layer(std::size_t i) const {return layers_.at(i);}
  const std::vector<LayerGrid> & layers() const {return layers_;}
  const GridGeometry & geometry() const {return layers_.front().geometry();}
  double timestamp() const {return timestamp_;}

  /// Standard-layout access; valid for maps built from a LayerSpec.
  const LayerGrid & layer(LayerRole role) const {return layers_.at(static_cast<std::size_t>(role));}

private:
  std::vector<LayerGrid> layers_;
  double timestamp_;
};

/// Single pass over the cloud; each point lands in at most one layer.
inline MultiLayerMap build_multilayer(
  std::span<const IntensityPoint> points, const std::vector<HeightInterval> & intervals, const GridGeometry & geom,
  double timestamp = 0.0)
{
  std::vector<LayerGrid> layers;
  layers.reserve(intervals.size());
  for (const auto & iv : intervals) {
    layers.emplace_back(geom, iv);
  }
  for (std::size_t i = 0; i < intervals.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (intervals[i].overlaps(intervals[j])) {
        throw std::invalid_argument("build_multilayer: overlapping height intervals");
      }
    }
  }
  for (const auto & p : points) {
    for (std::size_t j = 0; j < intervals.size(); ++j) {
      if (intervals[j].contains(p.z)) {
        if (auto idx = geom.world_to_cell(p.x, p.y)) {
          layers[j].add(*idx, p.intensity);
        }
        break;
      }
    }
  }
  return MultiLayerMap(std::move(layers), timestamp);
}

inline MultiLayerMap build_multilayer(
  std::span<const IntensityPoint> points, const LayerSpec & spec, const GridGeometry & geom, double timestamp = 0.0)
{
  spec.validate();
  std::vector<HeightInterval> intervals;
  for (auto role : LayerSpec::roles) {
    intervals.push_back(spec.interval(role));
  }
  return build_multilayer(points, intervals, geom, timestamp);
}

}  // namespace mim
