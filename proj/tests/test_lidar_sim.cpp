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

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <numbers>

#include "mim/lidar_sim.hpp"

using namespace mim;

namespace
{

constexpr double kDeg = std::numbers::pi / 180.0;

Primitive wall_at(double x, Material m)
{
  return {Box{x, -5.0, 0.0, x + 0.2, 5.0, 3.0}, m, false, "wall"};
}

Primitive glass_plane_at(double x)
{
  return {PlaneSegment{x, -5.0, x, 5.0, 0.0, 3.0}, Material::glass(), false, "glass"};
}

Material noiseless(Material m)
{
  m.scatter_sigma = 0.0;
  return m;
}

RobotState at_origin()
{
  RobotState s;
  s.goal_world = {10.0, 0.0};
  return s;
}

double ring_of(const IntensityPoint & p)
{
  return std::atan2(p.z, std::hypot(p.x, p.y)) / kDeg;
}

}  // namespace

TEST(LidarSim, EmptySceneGivesNoPoints)
{
  EXPECT_TRUE(cast_scan({}, at_origin(), LidarConfig{}).empty());
}

TEST(LidarSim, OpaqueWallMatchesRayPlaneOracle)
{
  LidarConfig cfg;
  const std::vector<Primitive> scene{wall_at(2.0, noiseless(Material::concrete()))};
  const auto pts = cast_scan(scene, at_origin(), cfg);

  // count rays whose ray-plane intersection with x = 2 lies on the face
  std::size_t expected = 0;
  const int n_az = cfg.azimuth_count();
  for (int k = 0; k < n_az; ++k) {
    const double az = 2.0 * std::numbers::pi * k / n_az;
    if (std::cos(az) <= 0.0) {
      continue;
    }
    for (double el : cfg.elevations_deg) {
      const double horiz = 2.0 / std::cos(az);
      const double y = 2.0 * std::tan(az);
      const double z = cfg.sensor_height + horiz * std::tan(el * kDeg);
      const double range = horiz / std::cos(el * kDeg);
      if (std::abs(y) <= 5.0 && z >= 0.0 && z <= 3.0 && range <= cfg.max_range) {
        ++expected;
      }
    }
  }
  EXPECT_EQ(pts.size(), expected);
  for (const auto & p : pts) {
    EXPECT_NEAR(p.x, 2.0, 1e-9);
    EXPECT_DOUBLE_EQ(p.intensity, 0.9 * cfg.max_intensity);
    const double el = std::round(ring_of(p));
    const double az = std::atan2(p.y, p.x);
    const double range = std::sqrt(p.x * p.x + p.y * p.y + p.z * p.z);
    EXPECT_NEAR(range, 2.0 / (std::cos(el * kDeg) * std::cos(az)), 1e-9);
  }
}

TEST(LidarSim, GlassReflectsOnlyInGrazingRings)
{
  LidarConfig cfg;
  const std::vector<Primitive> scene{glass_plane_at(2.0)};
  std::map<long, int> per_ring;
  std::size_t total = 0;
  for (std::uint64_t scan = 0; scan < 5; ++scan) {
    const auto pts = cast_scan(scene, at_origin(), cfg, scan);
    total += pts.size();
    for (const auto & p : pts) {
      ++per_ring[std::lround(ring_of(p))];
      EXPECT_LT(p.intensity, 0.5 * cfg.max_intensity);
    }
  }
  EXPECT_GT(total, 0u);
  for (const auto & [ring, count] : per_ring) {
    EXPECT_LE(std::abs(ring), cfg.grazing_window_deg) << "ring " << ring << " had " << count;
  }
  EXPECT_GT(per_ring[-1], 0);
  EXPECT_GT(per_ring[1], 0);
}

TEST(LidarSim, GlassReflectionRateFollowsGrazingProbability)
{
  LidarConfig cfg;
  cfg.elevations_deg = {0.0};
  const std::vector<Primitive> scene{glass_plane_at(2.0)};
  const auto pts = cast_scan(scene, at_origin(), cfg, 7);
  // rays at elevation 0 reach the face for |az| <= atan(5/2)
  const double span = 2.0 * std::atan(2.5);
  const double rays = span / (cfg.azimuth_resolution_deg * kDeg);
  EXPECT_NEAR(pts.size() / rays, cfg.grazing_reflect_prob, 0.05);
}

TEST(LidarSim, DeterministicPerSeedAndScan)
{
  LidarConfig cfg;
  const std::vector<Primitive> scene{
    wall_at(3.0, Material::concrete()),
    {Box{1.0, -1.0, 0.0, 2.0, 1.0, 0.4}, Material::grass(), true, "grass"},
    {PlaneSegment{-2.0, -3.0, -2.0, 3.0, 0.0, 2.0}, Material::glass(), false, "glass"},
  };
  const auto a = cast_scan(scene, at_origin(), cfg, 4);
  const auto b = cast_scan(scene, at_origin(), cfg, 4);
  EXPECT_EQ(a, b);
  const auto c = cast_scan(scene, at_origin(), cfg, 5);
  EXPECT_NE(a, c);
  cfg.seed = 2;
  EXPECT_NE(a, cast_scan(scene, at_origin(), cfg, 4));
}

TEST(LidarSim, ReturnsInsideMinRangeAreDropped)
{
  LidarConfig cfg;
  const std::vector<Primitive> near{{Cylinder{0.35, 0.0, 0.05, 0.0, 2.0}, Material::concrete(), false, "post"}};
  EXPECT_TRUE(cast_scan(near, at_origin(), cfg).empty());

  const std::vector<Primitive> scene{
    wall_at(0.6, Material::concrete()),
    {Cylinder{-0.2, 0.3, 0.1, 0.0, 2.0}, Material::bark(), false, "trunk"},
    {Box{-12.0, -1.0, 0.0, -11.0, 1.0, 2.0}, Material::concrete(), false, "far"},
  };
  const auto pts = cast_scan(scene, at_origin(), cfg);
  EXPECT_FALSE(pts.empty());
  for (const auto & p : pts) {
    const double range = std::sqrt(p.x * p.x + p.y * p.y + p.z * p.z);
    EXPECT_GE(range, cfg.min_range);
    EXPECT_LE(range, cfg.max_range);
  }
}

TEST(LidarSim, NoPointBehindFirstOpaqueHit)
{
  LidarConfig cfg;
  const std::vector<Primitive> scene{
    wall_at(2.0, Material::concrete()),
    wall_at(4.0, Material::concrete()),
    {Box{1.0, -0.5, 0.0, 1.5, 0.5, 0.6}, Material::grass(), true, "grass"},
  };
  for (const auto & p : cast_scan(scene, at_origin(), cfg)) {
    EXPECT_LE(p.x, 2.0 + 1e-9);
  }
}

TEST(LidarSim, MaterialIntensitiesSeparateWithoutNoise)
{
  LidarConfig cfg;
  const std::vector<Primitive> scene{
    wall_at(4.0, noiseless(Material::concrete())),
    {Cylinder{2.0, 1.0, 0.2, 0.0, 2.0}, noiseless(Material::bark()), false, "trunk"},
    {Box{-2.0, -2.0, 0.0, -1.0, 2.0, 1.0}, noiseless(Material::bush()), false, "bush"},
    {Box{1.0, -2.0, 0.0, 2.5, -1.0, 0.5}, noiseless(Material::grass()), true, "grass"},
    {Box{0.0, 2.0, 0.0, 1.0, 3.0, 2.0}, noiseless(Material::curtain()), true, "curtain"},
    {PlaneSegment{-3.0, -3.0, 3.0, -3.0, 0.0, 2.0}, noiseless(Material::glass()), false, "glass"},
  };
  const double R = cfg.max_intensity;
  std::map<MaterialKind, int> seen;
  detail::cast_rays(scene, at_origin().pose, cfg, 0, detail::CastMode::sensing,
    [&](const IntensityPoint & p, int idx) {
      const auto kind = scene[static_cast<std::size_t>(idx)].material.kind;
      ++seen[kind];
      if (kind == MaterialKind::solid_opaque) {
        EXPECT_GT(p.intensity, 0.75 * R);
      } else {
        EXPECT_LT(p.intensity, 0.5 * R);
      }
    });
  EXPECT_GT(seen[MaterialKind::solid_opaque], 0);
  EXPECT_GT(seen[MaterialKind::sparse_pliable], 0);
  EXPECT_GT(seen[MaterialKind::transparent], 0);
}

TEST(LidarSim, NoisyIntensityIsClamped)
{
  LidarConfig cfg;
  Material hot{MaterialKind::solid_opaque, 1.0, 0.0, 0.5};
  Material cold{MaterialKind::solid_opaque, 0.0, 0.0, 0.5};
  const std::vector<Primitive> scene{wall_at(2.0, hot), wall_at(-2.2, cold)};
  for (const auto & p : cast_scan(scene, at_origin(), cfg)) {
    EXPECT_GE(p.intensity, 0.0);
    EXPECT_LE(p.intensity, cfg.max_intensity);
  }
}

TEST(LidarSim, TruthIgnoresPassableAndSeesGlass)
{
  LidarConfig cfg;
  const std::vector<Primitive> scene{
    {Box{1.0, -5.0, 0.0, 1.5, 5.0, 2.0}, Material::grass(), true, "grass"},
    glass_plane_at(3.0),
  };
  const auto pts = cast_truth(scene, at_origin().pose, cfg);
  EXPECT_FALSE(pts.empty());
  for (const auto & p : pts) {
    EXPECT_NEAR(p.x, 3.0, 1e-9);
  }
}

TEST(LidarSim, ValidationRejectsBadInputs)
{
  LidarConfig cfg;
  cfg.min_range = 10.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.max_intensity = 0.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  Material m = Material::concrete();
  m.base_intensity = 1.2;
  EXPECT_THROW(m.validate(), std::invalid_argument);
  m = Material::glass();
  m.pass_probability = -0.1;
  EXPECT_THROW(m.validate(), std::invalid_argument);
  Primitive flat{Cylinder{0, 0, 0.0, 0, 1}, Material::bark(), false, "flat"};
  EXPECT_THROW(flat.validate(), std::invalid_argument);
}

TEST(StepRobot, StraightLine)
{
  const auto s = step_robot(RobotState{}, 1.0, 0.0, 1.0);
  EXPECT_DOUBLE_EQ(s.pose.x, 1.0);
  EXPECT_DOUBLE_EQ(s.pose.y, 0.0);
  EXPECT_DOUBLE_EQ(s.pose.yaw, 0.0);
}

TEST(StepRobot, TurnInPlace)
{
  const auto s = step_robot(RobotState{}, 0.0, std::numbers::pi / 2, 1.0);
  EXPECT_NEAR(s.pose.x, 0.0, 1e-12);
  EXPECT_NEAR(s.pose.y, 0.0, 1e-12);
  EXPECT_NEAR(s.pose.yaw, std::numbers::pi / 2, 1e-12);
}

TEST(StepRobot, QuarterArcEndpoint)
{
  const double w = std::numbers::pi / 2;
  const auto s = step_robot(RobotState{}, 1.0, w, 1.0);
  EXPECT_NEAR(s.pose.x, (1.0 / w) * std::sin(w), 1e-12);
  EXPECT_NEAR(s.pose.y, (1.0 / w) * (1.0 - std::cos(w)), 1e-12);
  EXPECT_NEAR(s.pose.x, 0.6366, 1e-4);
  EXPECT_NEAR(s.pose.y, 0.6366, 1e-4);
  EXPECT_NEAR(s.pose.yaw, w, 1e-12);
  EXPECT_DOUBLE_EQ(s.velocity.v, 1.0);
  EXPECT_DOUBLE_EQ(s.velocity.omega, w);
}

TEST(StepRobot, ArcStepsCompose)
{
  RobotState s0;
  s0.pose = {1.0, -2.0, 2.5};
  const auto whole = step_robot(s0, 0.7, -1.3, 0.8);
  const auto half = step_robot(step_robot(s0, 0.7, -1.3, 0.4), 0.7, -1.3, 0.4);
  EXPECT_NEAR(whole.pose.x, half.pose.x, 1e-12);
  EXPECT_NEAR(whole.pose.y, half.pose.y, 1e-12);
  EXPECT_NEAR(wrap_angle(whole.pose.yaw - half.pose.yaw), 0.0, 1e-12);
  // the arc stays on the circle of radius v/ω
  const double r = 0.7 / 1.3;
  const double cx = s0.pose.x + r * std::sin(s0.pose.yaw);
  const double cy = s0.pose.y - r * std::cos(s0.pose.yaw);
  EXPECT_NEAR(std::hypot(whole.pose.x - cx, whole.pose.y - cy), r, 1e-12);
}

TEST(StepRobot, RejectsNonPositiveDt)
{
  EXPECT_THROW(step_robot(RobotState{}, 1.0, 0.0, 0.0), std::invalid_argument);
  EXPECT_THROW(step_robot(RobotState{}, 1.0, 0.0, -0.1), std::invalid_argument);
}

TEST(Footprint, DistanceToShapes)
{
  EXPECT_DOUBLE_EQ(footprint_distance(Box{0, 0, 0, 1, 1, 1}, 0.5, 0.5), 0.0);
  EXPECT_DOUBLE_EQ(footprint_distance(Box{0, 0, 0, 1, 1, 1}, 4.0, 5.0), 5.0);
  EXPECT_DOUBLE_EQ(footprint_distance(Cylinder{0, 0, 1, 0, 1}, 3.0, 0.0), 2.0);
  EXPECT_DOUBLE_EQ(footprint_distance(Cylinder{0, 0, 1, 0, 1}, 0.2, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(footprint_distance(PlaneSegment{0, 0, 2, 0, 0, 1}, 1.0, -0.5), 0.5);
  EXPECT_DOUBLE_EQ(footprint_distance(PlaneSegment{0, 0, 2, 0, 0, 1}, 5.0, 4.0), 5.0);
}

TEST(Footprint, CellTouchAgreesWithSampling)
{
  const Pose2D pose{0.3, -0.2, 0.6};
  const std::vector<Shape> shapes{
    Box{0.5, 0.5, 0, 1.3, 0.9, 1}, Cylinder{1.0, -0.5, 0.25, 0, 1}, PlaneSegment{-1.0, 1.0, 1.0, 0.4, 0, 1}};
  const double g = 0.1;
  for (const auto & shape : shapes) {
    for (int i = -20; i < 20; ++i) {
      for (int j = -20; j < 20; ++j) {
        const double x0 = i * g, y0 = j * g;
        bool sampled = false;
        for (int a = 0; a <= 20 && !sampled; ++a) {
          for (int b = 0; b <= 20 && !sampled; ++b) {
            const Vec2 w = robot_to_world(pose, x0 + a * g / 20, y0 + b * g / 20);
            sampled = footprint_distance(shape, w.x, w.y) < 1e-9;
          }
        }
        // sampling can miss thin contacts, never invent them
        if (sampled) {
          EXPECT_TRUE(footprint_touches_cell(shape, pose, x0, y0, g)) << i << "," << j;
        }
      }
    }
  }
}
