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
#include <cstdint>
#include <stdexcept>

#include "mim/core_types.hpp"
#include "mim/map_builder.hpp"

namespace mim
{

enum class CellClass : std::uint8_t
{
  free = 0,
  tp = 1,
  fp = 2,
};

/// Intensity threshold in absolute intensity units, compared against per-cell mean intensity.
struct ClassifierParams
{
  double gamma{127.5};

  static ClassifierParams from_fraction(double fraction, double max_intensity)
  {
    return {fraction * max_intensity};
  }

  void validate(double max_intensity) const
  {
    if (!(gamma > 0.0 && gamma < max_intensity)) {
      throw std::invalid_argument("ClassifierParams: need 0 < gamma < R");
    }
  }
};

/// Solid (tp) and passable (fp) obstacle maps. Values are the largest layer
/// value (summed intensity per area) at the cell; zero elsewhere.
struct ClassifiedMaps
{
  Grid<double> tp;
  Grid<double> fp;
  Grid<CellClass> labels;

  explicit ClassifiedMaps(const GridGeometry & geom)
  : tp(geom, 0.0), fp(geom, 0.0), labels(geom, CellClass::free) {}
};

/// A cell occupied in any of the three layers is passable when its mean
/// intensity is <= gamma in all three (empty layers count as 0), solid otherwise.
inline ClassifiedMaps classify(
  const LayerGrid & ground, const LayerGrid & above, const LayerGrid & below, const ClassifierParams & params)
{
  const GridGeometry & geom = ground.geometry();
  if (!(above.geometry() == geom) || !(below.geometry() == geom)) {
    throw std::invalid_argument("classify: layers must share geometry");
  }
  ClassifiedMaps out(geom);
  const int n = geom.n();
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      if (!ground.occupied(r, c) && !above.occupied(r, c) && !below.occupied(r, c)) {
        continue;
      }
      const bool passable = ground.mean(r, c) <= params.gamma && above.mean(r, c) <= params.gamma &&
        below.mean(r, c) <= params.gamma;
      const double value = std::max({ground.value(r, c), above.value(r, c), below.value(r, c)});
      if (passable) {
        out.fp(r, c) = value;
        out.labels(r, c) = CellClass::fp;
      } else {
        out.tp(r, c) = value;
        out.labels(r, c) = CellClass::tp;
      }
    }
  }
  return out;
}

inline ClassifiedMaps classify(const MultiLayerMap & map, const ClassifierParams & params)
{
  return classify(map.layer(LayerRole::ground), map.layer(LayerRole::above), map.layer(LayerRole::below), params);
}

}  // namespace mim
