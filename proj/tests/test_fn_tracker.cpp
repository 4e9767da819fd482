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
#include <numbers>
#include <random>

#include "mim/fn_tracker.hpp"
#include "mim/lidar_sim.hpp"

using namespace mim;

namespace
{

constexpr double R = 255.0;

FnParams literal_params()
{
  FnParams p;
  p.gamma = 0.5 * R;
  return p;
}

LayerGrid layer(const GridGeometry & geom, LayerRole role)
{
  return LayerGrid(geom, LayerSpec{}.interval(role));
}

FNMap single_cell(const GridGeometry & geom, int r, int c)
{
  FNMap m(geom);
  const auto ctr = geom.cell_center(r, c);
  m.insert({r, c}, FnCell{true, true, 0, ctr.x_low, ctr.y_low});
  return m;
}

std::vector<CellIndex> support_of(const FNMap & m)
{
  std::vector<CellIndex> out;
  for (int r = 0; r < m.geometry().n(); ++r) {
    for (int c = 0; c < m.geometry().n(); ++c) {
      if (m.occupied(r, c)) {
        out.push_back({r, c});
      }
    }
  }
  return out;
}

}  // namespace

TEST(GlassDifference, CommonSupportCancels)
{
  GridGeometry geom(40, 0.1);
  auto ground = layer(geom, LayerRole::ground), probe = layer(geom, LayerRole::glass_probe);
  for (int c = 10; c < 20; ++c) {
    ground.add({25, c}, 0.9 * R);
    probe.add({25, c}, 0.9 * R);
  }
  const auto ev = glass_difference(ground, probe, literal_params());
  for (int c = 0; c < 40; ++c) {
    EXPECT_EQ(ev(25, c), 0);
  }
}

TEST(GlassDifference, WeakGroundOnlyReturnsAreMarked)
{
  GridGeometry geom(40, 0.1);
  auto ground = layer(geom, LayerRole::ground), probe = layer(geom, LayerRole::glass_probe);
  ground.add({30, 10}, 0.2 * R);
  ground.add({30, 11}, 0.25 * R);
  ground.add({5, 5}, 0.9 * R);   // bright: solid, not glass
  const auto ev = glass_difference(ground, probe, literal_params());
  EXPECT_EQ(ev(30, 10), 1);
  EXPECT_EQ(ev(30, 11), 1);
  EXPECT_EQ(ev(5, 5), 0);
  int total = 0;
  for (auto v : ev.data()) {
    total += v;
  }
  EXPECT_EQ(total, 2);
}

TEST(GlassDifference, GrassInBothLayersIsNotGlass)
{
  GridGeometry geom(40, 0.1);
  auto ground = layer(geom, LayerRole::ground), probe = layer(geom, LayerRole::glass_probe);
  ground.add({12, 12}, 0.3 * R);
  probe.add({12, 12}, 0.3 * R);
  EXPECT_EQ(glass_difference(ground, probe, literal_params())(12, 12), 0);
}

TEST(GlassDifference, ProbeClearanceRadius)
{
  GridGeometry geom(40, 0.1);
  auto ground = layer(geom, LayerRole::ground), probe = layer(geom, LayerRole::glass_probe);
  ground.add({20, 20}, 0.2 * R);
  probe.add({21, 19}, 0.2 * R);
  auto p = literal_params();
  EXPECT_EQ(glass_difference(ground, probe, p)(20, 20), 0);
  p.probe_clearance_cells = 0;
  EXPECT_EQ(glass_difference(ground, probe, p)(20, 20), 1);
}

TEST(GlassDifference, AboveAndBelowVetoInStandardStack)
{
  GridGeometry geom(40, 0.1);
  std::vector<IntensityPoint> pts{{0.55, 0.55, 0.0, 50.0}, {0.55, 0.55, 0.3, 50.0}};
  const auto map = build_multilayer(pts, LayerSpec{}, geom);
  auto p = literal_params();
  EXPECT_EQ(glass_difference(map, p)(25, 25), 0);
  p.all_layers_negative = false;
  EXPECT_EQ(glass_difference(map, p)(25, 25), 1);
}

TEST(GlassDifference, RejectsGeometryMismatch)
{
  auto ground = layer(GridGeometry(40, 0.1), LayerRole::ground);
  auto probe = layer(GridGeometry(40, 0.2), LayerRole::glass_probe);
  EXPECT_THROW(glass_difference(ground, probe, literal_params()), std::invalid_argument);
}

TEST(GlassDifference, SimulatedGlassEvidenceLiesOnPane)
{
  GridGeometry geom(200, 0.1);
  LidarConfig cfg;
  const PlaneSegment pane{2.0, -2.0, 2.0, 2.0, 0.0, 2.0};
  const std::vector<Primitive> scene{{pane, Material::glass(), false, "glass"}};
  RobotState robot;
  int marked = 0;
  for (std::uint64_t scan = 0; scan < 3; ++scan) {
    const auto map = build_multilayer(cast_scan(scene, robot, cfg, scan), LayerSpec{}, geom);
    const auto ev = glass_difference(map, literal_params());
    for (int r = 0; r < geom.n(); ++r) {
      for (int c = 0; c < geom.n(); ++c) {
        if (!ev(r, c)) {
          continue;
        }
        ++marked;
        const auto lo = geom.cell_to_world(r, c);
        EXPECT_TRUE(footprint_touches_cell(pane, robot.pose, lo.x_low, lo.y_low, geom.g())) << r << "," << c;
      }
    }
  }
  EXPECT_GT(marked, 0);
}

TEST(TransformFn, IdentityKeepsMap)
{
  GridGeometry geom(60, 0.1);
  const auto m = single_cell(geom, 40, 17);
  const auto out = transform_fn(m, MotionDelta{});
  EXPECT_TRUE(out.occupied(40, 17));
  EXPECT_EQ(out.count(), 1u);
  EXPECT_EQ(out.at(40, 17).age, 1u);
}

TEST(TransformFn, ForwardMotionShiftsRowsBack)
{
  GridGeometry geom(200, 0.1);
  const auto out = transform_fn(single_cell(geom, 150, 80), MotionDelta{1.0, 0.0, 0.0});
  EXPECT_TRUE(out.occupied(140, 80));
  EXPECT_EQ(out.count(), 1u);
}

TEST(TransformFn, YawRotatesCellAboutRobot)
{
  GridGeometry geom(200, 0.1);
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> cell(40, 160);
  for (int k = 0; k < 50; ++k) {
    const int r = cell(rng), c = cell(rng);
    const auto out = transform_fn(single_cell(geom, r, c), MotionDelta{0.0, 0.0, std::numbers::pi / 2});
    // a left turn moves a fixed point clockwise in the robot frame: (x, y) -> (y, -x)
    const auto ctr = geom.cell_center(r, c);
    const auto want = geom.world_to_cell(ctr.y_low, -ctr.x_low);
    ASSERT_TRUE(want);
    const auto got = support_of(out);
    ASSERT_EQ(got.size(), 1u);
    EXPECT_LE(std::abs(got[0].r - want->r), 1);
    EXPECT_LE(std::abs(got[0].c - want->c), 1);
  }
}

TEST(TransformFn, CellsLeavingExtentAreDropped)
{
  GridGeometry geom(40, 0.1);
  const auto out = transform_fn(single_cell(geom, 2, 20), MotionDelta{1.0, 0.0, 0.0});
  EXPECT_EQ(out.count(), 0u);
}

TEST(TransformFn, RoundTripRestoresSupport)
{
  GridGeometry geom(200, 0.1);
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> cell(60, 140);
  std::uniform_real_distribution<double> d(-0.5, 0.5), yaw(-0.6, 0.6);
  for (int k = 0; k < 30; ++k) {
    const int r = cell(rng), c = cell(rng);
    const MotionDelta delta{d(rng), d(rng), yaw(rng)};
    const auto back = transform_fn(transform_fn(single_cell(geom, r, c), delta), delta.inverse());
    const auto got = support_of(back);
    ASSERT_EQ(got.size(), 1u);
    EXPECT_LE(std::abs(got[0].r - r), 1);
    EXPECT_LE(std::abs(got[0].c - c), 1);
  }
}

TEST(TransformFn, MotionDeltaBetweenPoses)
{
  const Pose2D a{1.0, 2.0, 0.3}, b{1.5, 2.4, 0.9};
  const auto delta = MotionDelta::between(a, b);
  // a world point expressed in frame a, carried by delta, equals the point in frame b
  const Vec2 pa = world_to_robot(a, 4.0, -1.0);
  const Vec2 pb = world_to_robot(b, 4.0, -1.0);
  const Vec2 q = delta.apply(pa.x, pa.y);
  EXPECT_NEAR(q.x, pb.x, 1e-12);
  EXPECT_NEAR(q.y, pb.y, 1e-12);
  EXPECT_THROW(transform_fn(FNMap(GridGeometry(10, 0.1)), MotionDelta{NAN, 0, 0}), std::invalid_argument);
}

TEST(AccumulateFn, EmptyStaysEmpty)
{
  GridGeometry geom(40, 0.1);
  EXPECT_EQ(accumulate_fn(BinaryGrid(geom, 0), FNMap(geom), literal_params()).count(), 0u);
}

TEST(AccumulateFn, ThreeCollinearCellsExtendByTwoMetres)
{
  GridGeometry geom(200, 0.1);
  BinaryGrid ev(geom, 0);
  ev(130, 70) = ev(131, 70) = ev(132, 70) = 1;
  const auto out = accumulate_fn(ev, FNMap(geom), literal_params());
  int along = 0;
  for (int r = 0; r < geom.n(); ++r) {
    along += out.occupied(r, 70);
  }
  // observed centres span 0.2 m; plus 1 m at each end
  const double expected = (0.2 + 2.0) / geom.g() + 1.0;
  EXPECT_NEAR(along, expected, 1.0);
  EXPECT_EQ(static_cast<int>(out.count()), along);
  EXPECT_TRUE(out.at(131, 70).observed);
  EXPECT_FALSE(out.at(125, 70).observed);
}

TEST(AccumulateFn, TwoCellsDoNotExtrapolate)
{
  GridGeometry geom(100, 0.1);
  BinaryGrid ev(geom, 0);
  ev(60, 40) = ev(61, 40) = 1;
  EXPECT_EQ(accumulate_fn(ev, FNMap(geom), literal_params()).count(), 2u);
}

TEST(AccumulateFn, DiagonalSegmentFollowsLine)
{
  GridGeometry geom(200, 0.1);
  BinaryGrid ev(geom, 0);
  for (int k = 0; k < 4; ++k) {
    ev(120 + k, 120 + k) = 1;
  }
  const auto out = accumulate_fn(ev, FNMap(geom), literal_params());
  for (int k = -6; k < 10; ++k) {
    EXPECT_TRUE(out.occupied(120 + k, 120 + k)) << k;
  }
  for (auto idx : support_of(out)) {
    EXPECT_LE(std::abs(idx.r - idx.c), 1);
  }
}

TEST(AccumulateFn, StopMaskHaltsExtension)
{
  GridGeometry geom(200, 0.1);
  BinaryGrid ev(geom, 0), solid(geom, 0);
  ev(130, 70) = ev(131, 70) = ev(132, 70) = 1;
  solid(137, 71) = 1;
  const auto out = accumulate_fn(ev, FNMap(geom), literal_params(), &solid);
  EXPECT_FALSE(out.occupied(137, 70));
  EXPECT_FALSE(out.occupied(140, 70));
  EXPECT_TRUE(out.occupied(135, 70));
  EXPECT_TRUE(out.occupied(121, 70));
}

TEST(AccumulateFn, UnionNeverErases)
{
  GridGeometry geom(100, 0.1);
  FnTracker tracker(geom, literal_params());
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> xy(-3.0, 3.0);
  FNMap prev(geom);
  for (int frame = 0; frame < 10; ++frame) {
    std::vector<IntensityPoint> pts;
    for (int k = 0; k < 5; ++k) {
      pts.push_back({xy(rng), xy(rng), 0.0, 40.0});
    }
    const auto & cur = tracker.update(build_multilayer(pts, LayerSpec{}, geom), MotionDelta{});
    for (auto idx : support_of(prev)) {
      ASSERT_TRUE(cur.occupied(idx.r, idx.c));
    }
    prev = cur;
  }
  EXPECT_GT(prev.count(), 0u);
  tracker.reset();
  EXPECT_EQ(tracker.map().count(), 0u);
}

TEST(FnTracker, OpaqueSceneYieldsNoGlass)
{
  GridGeometry geom(200, 0.1);
  LidarConfig cfg;
  const std::vector<Primitive> scene{
    {Box{-1.0, 1.5, 0.0, 9.0, 1.7, 2.5}, Material::concrete(), false, "north"},
    {Box{-1.0, -1.7, 0.0, 9.0, -1.5, 2.5}, Material::concrete(), false, "south"},
    {Cylinder{5.0, 0.8, 0.12, 0.0, 2.5}, Material::concrete(), false, "pillar"},
  };
  FnTracker tracker(geom, literal_params());
  RobotState robot;
  Pose2D prev = robot.pose;
  for (int frame = 0; frame < 20; ++frame) {
    robot = step_robot(robot, 0.4, 0.05, 0.1);
    const auto map = build_multilayer(cast_scan(scene, robot, cfg, static_cast<std::uint64_t>(frame)), LayerSpec{}, geom);
    tracker.update(map, MotionDelta::between(prev, robot.pose));
    prev = robot.pose;
    ASSERT_EQ(tracker.map().count(), 0u) << "frame " << frame;
  }
}
