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
 * \file lidar_sim.hpp
 * \brief Synthetic spinning lidar with intensity returns, plus unicycle kinematics.
 *
 * Scenes are lists of material-tagged primitives (world-aligned boxes, vertical
 * cylinders, vertical plane segments) standing on a floor at z = 0. The floor
 * itself never returns points. The sensor sits `sensor_height` above the floor
 * at the robot pose; returned points are expressed in the sensor frame.
 *
 * Material model:
 *  - solid_opaque: always reflects at base_intensity * R.
 *  - transparent: reflects only for rays with |elevation| <= grazing window,
 *    with probability `grazing_reflect_prob`; other rays reflect with
 *    probability 1 - pass_probability (default never).
 *  - sparse_pliable: each surface crossing reflects with probability
 *    1 - pass_probability.
 * Intensity noise is Gaussian (std-dev scatter_sigma * R), clamped to [0, R].
 * Every ray draws from its own generator seeded by (seed, scan_id, ray index),
 * so the cloud does not depend on evaluation order.
 */

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "mim/core_types.hpp"

namespace mim
{

enum class MaterialKind
{
  solid_opaque,
  transparent,
  sparse_pliable,
};

struct Material
{
  MaterialKind kind{MaterialKind::solid_opaque};
  double base_intensity{0.9};     // fraction of R
  double pass_probability{0.0};
  double scatter_sigma{0.03};     // fraction of R

  void validate() const
  {
    if (base_intensity < 0.0 || base_intensity > 1.0) {
      throw std::invalid_argument("Material: base_intensity must be in [0, 1]");
    }
    if (pass_probability < 0.0 || pass_probability > 1.0) {
      throw std::invalid_argument("Material: pass_probability must be in [0, 1]");
    }
    if (scatter_sigma < 0.0) {
      throw std::invalid_argument("Material: scatter_sigma must be non-negative");
    }
  }

  static Material concrete() {return {MaterialKind::solid_opaque, 0.9, 0.0, 0.03};}
  static Material bark() {return {MaterialKind::solid_opaque, 0.85, 0.0, 0.03};}
  static Material bush() {return {MaterialKind::solid_opaque, 0.8, 0.0, 0.03};}
  static Material glass() {return {MaterialKind::transparent, 0.2, 1.0, 0.03};}
  static Material grass() {return {MaterialKind::sparse_pliable, 0.3, 0.7, 0.03};}
  static Material curtain() {return {MaterialKind::sparse_pliable, 0.3, 0.6, 0.03};}
};

/// World-aligned box.
struct Box
{
  double min_x, min_y, min_z;
  double max_x, max_y, max_z;
};

/// Vertical cylinder standing on [z0, z1].
struct Cylinder
{
  double cx, cy, radius;
  double z0, z1;
};

/// Zero-thickness vertical quad between two floor points.
struct PlaneSegment
{
  double ax, ay, bx, by;
  double z0, z1;
};

using Shape = std::variant<Box, Cylinder, PlaneSegment>;

struct Primitive
{
  Shape shape;
  Material material;
  bool passable{false};    // ground-truth label used for scoring
  std::string label;

  void validate() const
  {
    material.validate();
    std::visit(
      [](const auto & s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Box>) {
          if (!(s.max_x > s.min_x && s.max_y > s.min_y && s.max_z > s.min_z)) {
            throw std::invalid_argument("Box: dimensions must be positive");
          }
        } else if constexpr (std::is_same_v<T, Cylinder>) {
          if (!(s.radius > 0.0 && s.z1 > s.z0)) {
            throw std::invalid_argument("Cylinder: radius and height must be positive");
          }
        } else {
          if (!(std::hypot(s.bx - s.ax, s.by - s.ay) > 0.0 && s.z1 > s.z0)) {
            throw std::invalid_argument("PlaneSegment: length and height must be positive");
          }
        }
      },
      shape);
  }
};

struct LidarConfig
{
  std::vector<double> elevations_deg = default_elevations();
  double azimuth_resolution_deg{0.2};
  double max_range{10.0};
  double min_range{0.5};
  double max_intensity{255.0};       // R
  double sensor_height{0.45};
  double grazing_window_deg{1.0};
  double grazing_reflect_prob{0.3};
  std::uint64_t seed{1};

  static std::vector<double> default_elevations()
  {
    std::vector<double> e;
    for (int k = -15; k <= 15; k += 2) {
      e.push_back(k);
    }
    return e;
  }

  int azimuth_count() const
  {
    return static_cast<int>(std::lround(360.0 / azimuth_resolution_deg));
  }
  std::size_t ray_count() const
  {
    return elevations_deg.size() * static_cast<std::size_t>(azimuth_count());
  }

  void validate() const
  {
    if (elevations_deg.empty()) {
      throw std::invalid_argument("LidarConfig: at least one channel required");
    }
    if (!(azimuth_resolution_deg > 0.0 && azimuth_resolution_deg <= 360.0)) {
      throw std::invalid_argument("LidarConfig: azimuth resolution must be in (0, 360]");
    }
    if (!(min_range >= 0.0 && min_range < max_range)) {
      throw std::invalid_argument("LidarConfig: need 0 <= min_range < max_range");
    }
    if (!(max_intensity > 0.0)) {
      throw std::invalid_argument("LidarConfig: R must be positive");
    }
    if (grazing_reflect_prob < 0.0 || grazing_reflect_prob > 1.0) {
      throw std::invalid_argument("LidarConfig: grazing_reflect_prob must be in [0, 1]");
    }
  }
};

/// SplitMix64 as a UniformRandomBitGenerator; cheap to seed per ray.
class SplitMix64
{
public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed)
  : state_(seed) {}

  static constexpr result_type min() {return 0;}
  static constexpr result_type max() {return std::numeric_limits<result_type>::max();}

  result_type operator()()
  {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

private:
  std::uint64_t state_;
};

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b)
{
  SplitMix64 g(a ^ (b * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL));
  g();
  return g();
}

namespace detail
{

struct Ray
{
  double ox, oy, oz;
  double dx, dy, dz;
};

struct Hit
{
  double t;
  int primitive;
};

inline void intersect(const Box & b, const Ray & ray, int idx, std::vector<Hit> & out)
{
  double t0 = -std::numeric_limits<double>::infinity();
  double t1 = std::numeric_limits<double>::infinity();
  const std::array<double, 3> o{ray.ox, ray.oy, ray.oz};
  const std::array<double, 3> d{ray.dx, ray.dy, ray.dz};
  const std::array<double, 3> lo{b.min_x, b.min_y, b.min_z};
  const std::array<double, 3> hi{b.max_x, b.max_y, b.max_z};
  for (int k = 0; k < 3; ++k) {
    if (std::abs(d[k]) < 1e-12) {
      if (o[k] < lo[k] || o[k] > hi[k]) {
        return;
      }
      continue;
    }
    double a = (lo[k] - o[k]) / d[k];
    double c = (hi[k] - o[k]) / d[k];
    if (a > c) {
      std::swap(a, c);
    }
    t0 = std::max(t0, a);
    t1 = std::min(t1, c);
  }
  if (t0 > t1 || t1 <= 0.0) {
    return;
  }
  if (t0 > 0.0) {
    out.push_back({t0, idx});
  }
  out.push_back({t1, idx});
}

inline void intersect(const Cylinder & cyl, const Ray & ray, int idx, std::vector<Hit> & out)
{
  const double px = ray.ox - cyl.cx;
  const double py = ray.oy - cyl.cy;
  const double a = ray.dx * ray.dx + ray.dy * ray.dy;
  const double r2 = cyl.radius * cyl.radius;
  auto radial_ok = [&](double t) {
      const double x = px + t * ray.dx;
      const double y = py + t * ray.dy;
      return x * x + y * y <= r2;
    };
  auto z_ok = [&](double t) {
      const double z = ray.oz + t * ray.dz;
      return z >= cyl.z0 && z <= cyl.z1;
    };
  if (a > 1e-12) {
    const double b = 2.0 * (px * ray.dx + py * ray.dy);
    const double c = px * px + py * py - r2;
    const double disc = b * b - 4.0 * a * c;
    if (disc >= 0.0) {
      const double sq = std::sqrt(disc);
      for (double t : {(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)}) {
        if (t > 0.0 && z_ok(t)) {
          out.push_back({t, idx});
        }
      }
    }
  }
  if (std::abs(ray.dz) > 1e-12) {
    for (double zc : {cyl.z0, cyl.z1}) {
      const double t = (zc - ray.oz) / ray.dz;
      if (t > 0.0 && radial_ok(t)) {
        out.push_back({t, idx});
      }
    }
  }
}

inline void intersect(const PlaneSegment & s, const Ray & ray, int idx, std::vector<Hit> & out)
{
  // Solve o + t d = a + u (b - a) in the horizontal plane.
  const double ex = s.bx - s.ax;
  const double ey = s.by - s.ay;
  const double denom = ray.dx * ey - ray.dy * ex;
  if (std::abs(denom) < 1e-12) {
    return;
  }
  const double wx = s.ax - ray.ox;
  const double wy = s.ay - ray.oy;
  const double t = (wx * ey - wy * ex) / denom;
  const double u = (wx * ray.dy - wy * ray.dx) / denom;
  if (t <= 0.0 || u < 0.0 || u > 1.0) {
    return;
  }
  const double z = ray.oz + t * ray.dz;
  if (z < s.z0 || z > s.z1) {
    return;
  }
  out.push_back({t, idx});
}

inline void intersect(const Shape & shape, const Ray & ray, int idx, std::vector<Hit> & out)
{
  std::visit([&](const auto & s) {intersect(s, ray, idx, out);}, shape);
}

/// Horizontal bounding circle of a shape.
inline void bounding_circle(const Shape & shape, double & cx, double & cy, double & radius)
{
  std::visit(
    [&](const auto & s) {
      using T = std::decay_t<decltype(s)>;
      if constexpr (std::is_same_v<T, Box>) {
        cx = 0.5 * (s.min_x + s.max_x);
        cy = 0.5 * (s.min_y + s.max_y);
        radius = 0.5 * std::hypot(s.max_x - s.min_x, s.max_y - s.min_y);
      } else if constexpr (std::is_same_v<T, Cylinder>) {
        cx = s.cx;
        cy = s.cy;
        radius = s.radius;
      } else {
        cx = 0.5 * (s.ax + s.bx);
        cy = 0.5 * (s.ay + s.by);
        radius = 0.5 * std::hypot(s.bx - s.ax, s.by - s.ay);
      }
    },
    shape);
}

/// For each azimuth bin, the primitives whose bounding circle it can reach.
inline std::vector<std::vector<int>> azimuth_buckets(
  const std::vector<Primitive> & scene, const Pose2D & pose, const LidarConfig & cfg)
{
  const int n_az = cfg.azimuth_count();
  const double res = cfg.azimuth_resolution_deg * std::numbers::pi / 180.0;
  std::vector<std::vector<int>> buckets(static_cast<std::size_t>(n_az));
  for (std::size_t i = 0; i < scene.size(); ++i) {
    double cx, cy, rad;
    bounding_circle(scene[i].shape, cx, cy, rad);
    const Vec2 local = world_to_robot(pose, cx, cy);
    const double d = std::hypot(local.x, local.y);
    if (d - rad > cfg.max_range) {
      continue;
    }
    if (d <= rad + 1e-9) {
      for (auto & b : buckets) {
        b.push_back(static_cast<int>(i));
      }
      continue;
    }
    const double center = std::atan2(local.y, local.x);
    const double half = std::asin(std::min(1.0, rad / d)) + res;
    const int k0 = static_cast<int>(std::floor((center - half) / res));
    const int k1 = static_cast<int>(std::ceil((center + half) / res));
    for (int k = k0; k <= k1 && k - k0 < n_az; ++k) {
      const int wrapped = ((k % n_az) + n_az) % n_az;
      buckets[static_cast<std::size_t>(wrapped)].push_back(static_cast<int>(i));
    }
  }
  return buckets;
}

enum class CastMode
{
  sensing,        // material model with noise and pass-through
  ground_truth,   // non-passable primitives are opaque, passable ones invisible
};

template<typename Emit>
void cast_rays(
  const std::vector<Primitive> & scene, const Pose2D & pose, const LidarConfig & cfg,
  std::uint64_t scan_id, CastMode mode, Emit && emit)
{
  const int n_az = cfg.azimuth_count();
  const double res = 2.0 * std::numbers::pi / n_az;
  const double deg = std::numbers::pi / 180.0;
  const double R = cfg.max_intensity;
  const auto buckets = azimuth_buckets(scene, pose, cfg);
  const std::uint64_t scan_seed = mix_seed(cfg.seed, scan_id);

  std::vector<Hit> hits;
  std::vector<double> sin_el, cos_el;
  for (double e : cfg.elevations_deg) {
    sin_el.push_back(std::sin(e * deg));
    cos_el.push_back(std::cos(e * deg));
  }
  const std::size_t n_ch = cfg.elevations_deg.size();

  for (int k = 0; k < n_az; ++k) {
    const auto & cand = buckets[static_cast<std::size_t>(k)];
    if (cand.empty()) {
      continue;
    }
    const double az = k * res;
    const double wa = pose.yaw + az;
    const double ca = std::cos(wa), sa = std::sin(wa);
    const double la = std::cos(az), ls = std::sin(az);
    for (std::size_t ch = 0; ch < n_ch; ++ch) {
      Ray ray{pose.x, pose.y, cfg.sensor_height, cos_el[ch] * ca, cos_el[ch] * sa, sin_el[ch]};
      hits.clear();
      for (int idx : cand) {
        intersect(scene[static_cast<std::size_t>(idx)].shape, ray, idx, hits);
      }
      if (hits.empty()) {
        continue;
      }
      std::sort(hits.begin(), hits.end(), [](const Hit & a, const Hit & b) {
          return a.t < b.t || (a.t == b.t && a.primitive < b.primitive);
        });
      const std::uint64_t ray_index = static_cast<std::uint64_t>(k) * n_ch + ch;
      SplitMix64 rng(mix_seed(scan_seed, ray_index));
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      const bool grazing = std::abs(cfg.elevations_deg[ch]) <= cfg.grazing_window_deg;

      for (const Hit & h : hits) {
        const Primitive & prim = scene[static_cast<std::size_t>(h.primitive)];
        const Material & m = prim.material;
        bool reflect = false;
        double intensity = 0.0;
        if (mode == CastMode::ground_truth) {
          reflect = !prim.passable;
        } else {
          double reflect_prob = 1.0 - m.pass_probability;
          if (m.kind == MaterialKind::transparent && grazing) {
            reflect_prob = cfg.grazing_reflect_prob;
          }
          if (m.kind == MaterialKind::solid_opaque) {
            reflect_prob = 1.0;
          }
          // Always draw so the stream position does not depend on material.
          const double u = unit(rng);
          reflect = u < reflect_prob;
          if (reflect) {
            double noise = 0.0;
            if (m.scatter_sigma > 0.0) {
              std::normal_distribution<double> gauss(0.0, m.scatter_sigma * R);
              noise = gauss(rng);
            }
            intensity = std::clamp(m.base_intensity * R + noise, 0.0, R);
          }
        }
        if (!reflect) {
          continue;
        }
        if (h.t >= cfg.min_range && h.t <= cfg.max_range) {
          emit(IntensityPoint{h.t * cos_el[ch] * la, h.t * cos_el[ch] * ls, h.t * sin_el[ch], intensity}, h.primitive);
        }
        break;   // first reflecting surface ends the ray
      }
    }
  }
}

}  // namespace detail

/// One simulated revolution at the robot pose. `scan_id` selects the noise stream.
inline std::vector<IntensityPoint> cast_scan(
  const std::vector<Primitive> & scene, const RobotState & robot, const LidarConfig & cfg,
  std::uint64_t scan_id = 0)
{
  cfg.validate();
  std::vector<IntensityPoint> points;
  points.reserve(cfg.ray_count() / 2);
  detail::cast_rays(scene, robot.pose, cfg, scan_id, detail::CastMode::sensing,
    [&](const IntensityPoint & p, int) {points.push_back(p);});
  return points;
}

/// Noise-free returns off non-passable primitives only (passable ones are see-through).
/// Transparent primitives count as opaque. Used to label ground truth.
inline std::vector<IntensityPoint> cast_truth(
  const std::vector<Primitive> & scene, const Pose2D & pose, const LidarConfig & cfg)
{
  std::vector<IntensityPoint> points;
  detail::cast_rays(scene, pose, cfg, 0, detail::CastMode::ground_truth,
    [&](const IntensityPoint & p, int) {points.push_back(p);});
  return points;
}

/// Unicycle integration; exact arc when the turn over dt is non-negligible.
inline RobotState step_robot(const RobotState & robot, double v, double omega, double dt)
{
  if (!(dt > 0.0)) {
    throw std::invalid_argument("step_robot: dt must be positive");
  }
  RobotState next = robot;
  const double yaw = robot.pose.yaw;
  if (std::abs(omega) * dt > 1e-6) {
    const double yaw1 = yaw + omega * dt;
    next.pose.x += v / omega * (std::sin(yaw1) - std::sin(yaw));
    next.pose.y += v / omega * (std::cos(yaw) - std::cos(yaw1));
    next.pose.yaw = wrap_angle(yaw1);
  } else {
    next.pose.yaw = wrap_angle(yaw + omega * dt);
    next.pose.x += v * std::cos(next.pose.yaw) * dt;
    next.pose.y += v * std::sin(next.pose.yaw) * dt;
  }
  next.velocity = {v, omega};
  return next;
}

// ---------------------------------------------------------------------------
// 2D footprint queries (world frame) used for collisions and ground truth.

/// Distance from (x, y) to the primitive's floor footprint; 0 inside.
inline double footprint_distance(const Shape & shape, double x, double y)
{
  return std::visit(
    [&](const auto & s) -> double {
      using T = std::decay_t<decltype(s)>;
      if constexpr (std::is_same_v<T, Box>) {
        const double dx = std::max({s.min_x - x, 0.0, x - s.max_x});
        const double dy = std::max({s.min_y - y, 0.0, y - s.max_y});
        return std::hypot(dx, dy);
      } else if constexpr (std::is_same_v<T, Cylinder>) {
        return std::max(0.0, std::hypot(x - s.cx, y - s.cy) - s.radius);
      } else {
        const double ex = s.bx - s.ax, ey = s.by - s.ay;
        const double len2 = ex * ex + ey * ey;
        const double u = std::clamp(((x - s.ax) * ex + (y - s.ay) * ey) / len2, 0.0, 1.0);
        return std::hypot(x - (s.ax + u * ex), y - (s.ay + u * ey));
      }
    },
    shape);
}

inline std::pair<double, double> z_range(const Shape & shape)
{
  return std::visit(
    [](const auto & s) -> std::pair<double, double> {
      using T = std::decay_t<decltype(s)>;
      if constexpr (std::is_same_v<T, Box>) {
        return {s.min_z, s.max_z};
      } else {
        return {s.z0, s.z1};
      }
    },
    shape);
}

/// Does the primitive's footprint touch the robot-frame square [x0, x0+g] x [y0, y0+g]
/// of a robot at `pose`? Separating-axis test on the robot-frame footprint.
inline bool footprint_touches_cell(const Shape & shape, const Pose2D & pose, double x0, double y0, double g)
{
  const double x1 = x0 + g, y1 = y0 + g;
  return std::visit(
    [&](const auto & s) -> bool {
      using T = std::decay_t<decltype(s)>;
      if constexpr (std::is_same_v<T, Cylinder>) {
        const Vec2 c = world_to_robot(pose, s.cx, s.cy);
        const double dx = std::max({x0 - c.x, 0.0, c.x - x1});
        const double dy = std::max({y0 - c.y, 0.0, c.y - y1});
        return dx * dx + dy * dy <= s.radius * s.radius;
      } else {
        std::vector<Vec2> poly;
        if constexpr (std::is_same_v<T, Box>) {
          poly = {world_to_robot(pose, s.min_x, s.min_y), world_to_robot(pose, s.max_x, s.min_y),
            world_to_robot(pose, s.max_x, s.max_y), world_to_robot(pose, s.min_x, s.max_y)};
        } else {
          poly = {world_to_robot(pose, s.ax, s.ay), world_to_robot(pose, s.bx, s.by)};
        }
        const std::array<Vec2, 4> sq{{{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}}};
        auto separated = [&](double ax, double ay) {
            double pmin = std::numeric_limits<double>::infinity(), pmax = -pmin;
            double qmin = pmin, qmax = -pmin;
            for (const auto & p : poly) {
              const double d = p.x * ax + p.y * ay;
              pmin = std::min(pmin, d);
              pmax = std::max(pmax, d);
            }
            for (const auto & q : sq) {
              const double d = q.x * ax + q.y * ay;
              qmin = std::min(qmin, d);
              qmax = std::max(qmax, d);
            }
            return pmax < qmin || qmax < pmin;
          };
        if (separated(1.0, 0.0) || separated(0.0, 1.0)) {
          return false;
        }
        for (std::size_t i = 0; i < poly.size(); ++i) {
          const Vec2 & a = poly[i];
          const Vec2 & b = poly[(i + 1) % poly.size()];
          if (separated(-(b.y - a.y), b.x - a.x)) {
            return false;
          }
        }
        return true;
      }
    },
    shape);
}

}  // namespace mim
