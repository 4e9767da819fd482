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

#include "mim/inflation.hpp"
#include "mim/lidar_sim.hpp"

using namespace mim;

namespace
{

std::vector<std::string> rows_of(const InflationKernel & k)
{
  std::vector<std::string> out;
  for (int i = 0; i < k.size(); ++i) {
    std::string row;
    for (int j = 0; j < k.size(); ++j) {
      row += k.at(i, j) ? '#' : '.';
    }
    out.push_back(row);
  }
  return out;
}

Grid<double> random_tp(const GridGeometry & geom, std::uint64_t seed, double density)
{
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution occ(density);
  Grid<double> tp(geom, 0.0);
  for (auto & v : tp.data()) {
    v = occ(rng) ? 1000.0 : 0.0;
  }
  return tp;
}

bool subset(const BinaryGrid & a, const BinaryGrid & b)
{
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    if (a.data()[i] && !b.data()[i]) {
      return false;
    }
  }
  return true;
}

}  // namespace

TEST(BuildKernel, GoalAheadGivesCentreColumn)
{
  const auto k = build_kernel(1.0, 0.0, 7, 0);
  const std::vector<std::string> want(7, "...#...");
  EXPECT_EQ(rows_of(k), want);
}

TEST(BuildKernel, GoalLeftGivesCentreRow)
{
  const auto k = build_kernel(0.0, 2.0, 7, 0);
  for (int i = 0; i < 7; ++i) {
    for (int j = 0; j < 7; ++j) {
      EXPECT_EQ(k.at(i, j), i == 3) << i << "," << j;
    }
  }
}

TEST(BuildKernel, DiagonalGoalGivesMainDiagonal)
{
  const auto k = build_kernel(1.0, 1.0, 7, 0);
  // slope-1 line through the centre: exactly the cells with i == j
  for (int i = 0; i < 7; ++i) {
    for (int j = 0; j < 7; ++j) {
      EXPECT_EQ(k.at(i, j), i == j) << i << "," << j;
    }
  }
}

TEST(BuildKernel, PaddingDilatesPerpendicular)
{
  for (auto [gx, gy] : {std::pair{1.0, 0.0}, std::pair{0.0, -1.0}}) {
    const auto k0 = build_kernel(gx, gy, 7, 0);
    const auto k1 = build_kernel(gx, gy, 7, 1);
    const bool vertical = gx != 0.0;
    for (int i = 0; i < 7; ++i) {
      for (int j = 0; j < 7; ++j) {
        bool dilated = false;
        for (int d = -1; d <= 1; ++d) {
          const int ii = vertical ? i : i + d, jj = vertical ? j + d : j;
          dilated = dilated || (ii >= 0 && ii < 7 && jj >= 0 && jj < 7 && k0.at(ii, jj));
        }
        EXPECT_EQ(k1.at(i, j), dilated);
      }
    }
    EXPECT_EQ(k1.popcount(), 3 * k0.popcount());
  }
}

TEST(BuildKernel, CellsLieWithinHalfWidthOfLine)
{
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> ang(-std::numbers::pi, std::numbers::pi);
  for (int trial = 0; trial < 200; ++trial) {
    const double th = ang(rng);
    const int pad = trial % 3;
    const auto k = build_kernel(std::cos(th), std::sin(th), 11, pad);
    EXPECT_TRUE(k.at(5, 5));
    for (int i = 0; i < 11; ++i) {
      for (int j = 0; j < 11; ++j) {
        const double dist = std::abs((i - 5) * std::sin(th) - (j - 5) * std::cos(th));
        if (dist <= pad + 0.5 - 1e-6) {
          EXPECT_TRUE(k.at(i, j));
        }
        if (dist > pad + 0.5 + 1e-6) {
          EXPECT_FALSE(k.at(i, j));
        }
      }
    }
    // symmetric about the centre
    for (int i = 0; i < 11; ++i) {
      for (int j = 0; j < 11; ++j) {
        EXPECT_EQ(k.at(i, j), k.at(10 - i, 10 - j));
      }
    }
  }
}

TEST(BuildKernel, PrincipalAxisFollowsGoal)
{
  for (double deg = -170.0; deg <= 180.0; deg += 10.0) {
    const double th = deg * std::numbers::pi / 180.0;
    const auto k = build_kernel(std::cos(th), std::sin(th), 21, 0);
    double srr = 0, scc = 0, src = 0;
    for (const auto & o : k.offsets()) {
      srr += o.dr * o.dr;
      scc += o.dc * o.dc;
      src += o.dr * o.dc;
    }
    const double axis = 0.5 * std::atan2(2 * src, srr - scc);
    double diff = std::remainder(axis - th, std::numbers::pi);
    EXPECT_LT(std::abs(diff), 3.0 * std::numbers::pi / 180.0) << deg;
  }
}

TEST(BuildKernel, OneSidedKeepsFarHalf)
{
  const auto k = build_kernel(1.0, 0.0, 7, 0, true);
  for (int i = 0; i < 7; ++i) {
    EXPECT_EQ(k.at(i, 3), i <= 3);
  }
}

TEST(BuildKernel, RejectsBadArguments)
{
  EXPECT_THROW(build_kernel(0.0, 0.0, 7, 0), std::invalid_argument);
  EXPECT_THROW(build_kernel(1.0, 0.0, 6, 0), std::invalid_argument);
  EXPECT_THROW(build_kernel(1.0, 0.0, 7, -1), std::invalid_argument);
}

TEST(Inflate, EmptyInputsStayEmpty)
{
  GridGeometry geom(30, 0.1);
  const auto out = inflate(Grid<double>(geom, 0.0), FNMap(geom), build_kernel(1, 0, 7, 1));
  for (auto v : out.data()) {
    EXPECT_EQ(v, 0);
  }
}

TEST(Inflate, SingleCellGivesTranslatedKernel)
{
  GridGeometry geom(30, 0.1);
  Grid<double> tp(geom, 0.0);
  tp(12, 17) = 500.0;
  const auto k = build_kernel(1.0, 0.0, 7, 1);
  const auto out = inflate(tp, FNMap(geom), k);
  for (int r = 0; r < 30; ++r) {
    for (int c = 0; c < 30; ++c) {
      const int i = r - 12 + 3, j = c - 17 + 3;
      const bool want = i >= 0 && i < 7 && j >= 0 && j < 7 && k.at(i, j);
      EXPECT_EQ(out(r, c) != 0, want) << r << "," << c;
    }
  }
}

TEST(Inflate, GlassCellsAreInflatedLikeSolid)
{
  GridGeometry geom(30, 0.1);
  FNMap fn(geom);
  fn.insert({10, 10}, FnCell{true, true, 0, 0.0, 0.0});
  const auto out = inflate_uniform(Grid<double>(geom, 0.0), fn, 1);
  int set = 0;
  for (auto v : out.data()) {
    set += v;
  }
  EXPECT_EQ(set, 9);
}

TEST(InflateUniform, RadiusZeroIsIdentityAndRadiusThreeIsBlock)
{
  GridGeometry geom(40, 0.1);
  const auto tp = random_tp(geom, 3, 0.05);
  const auto id = inflate_uniform(tp, FNMap(geom), 0);
  for (std::size_t i = 0; i < tp.data().size(); ++i) {
    EXPECT_EQ(id.data()[i] != 0, tp.data()[i] != 0.0);
  }
  Grid<double> one(geom, 0.0);
  one(20, 20) = 1.0;
  const auto block = inflate_uniform(one, FNMap(geom), 3);
  for (int r = 0; r < 40; ++r) {
    for (int c = 0; c < 40; ++c) {
      EXPECT_EQ(block(r, c) != 0, std::abs(r - 20) <= 3 && std::abs(c - 20) <= 3);
    }
  }
  EXPECT_THROW(inflate_uniform(one, FNMap(geom), -1), std::invalid_argument);
}

TEST(Inflate, MonotoneInPadding)
{
  GridGeometry geom(60, 0.1);
  const auto tp = random_tp(geom, 9, 0.02);
  for (double th : {0.0, 0.4, 1.2, 2.9}) {
    BinaryGrid prev = inflate(tp, FNMap(geom), build_kernel(std::cos(th), std::sin(th), 11, 0));
    for (int pad = 1; pad <= 5; ++pad) {
      const auto cur = inflate(tp, FNMap(geom), build_kernel(std::cos(th), std::sin(th), 11, pad));
      EXPECT_TRUE(subset(prev, cur));
      prev = cur;
    }
  }
}

TEST(Inflate, AdaptiveNeverExceedsUniform)
{
  GridGeometry geom(60, 0.1);
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> ang(-std::numbers::pi, std::numbers::pi);
  for (int trial = 0; trial < 20; ++trial) {
    const auto tp = random_tp(geom, 100 + trial, 0.03);
    const double th = ang(rng);
    const int e = 2 * (trial % 4) + 5;
    const int pad = trial % ((e - 1) / 2 + 1);
    const auto adaptive = inflate(tp, FNMap(geom), build_kernel(std::cos(th), std::sin(th), e, pad));
    const auto uniform = inflate_uniform(tp, FNMap(geom), (e - 1) / 2);
    EXPECT_TRUE(subset(adaptive, uniform));
  }
}

TEST(Inflate, DoorwayStaysOpenOnlyWithAdaptiveKernel)
{
  // wall across the path at row 131, with a 1.0 m opening over columns 95..104
  GridGeometry geom(200, 0.1);
  Grid<double> tp(geom, 0.0);
  for (int c = 70; c < 130; ++c) {
    if (c < 95 || c > 104) {
      tp(131, c) = 1000.0;
    }
  }
  const int e = 11, pad = 2;
  const auto adaptive = inflate(tp, FNMap(geom), build_kernel(1.0, 0.0, e, pad));
  const auto uniform = inflate_uniform(tp, FNMap(geom), (e - 1) / 2);
  int free_adaptive = 0, free_uniform = 0;
  for (int c = 95; c <= 104; ++c) {
    free_adaptive += adaptive(131, c) == 0;
    free_uniform += uniform(131, c) == 0;
  }
  EXPECT_EQ(free_adaptive, 10 - 2 * pad);
  EXPECT_EQ(free_uniform, 0);
}

TEST(PlanCosts, PassableCostIsGradedAndBounded)
{
  PlanCosts costs;
  EXPECT_EQ(costs.fp_cost(0.0), costs.fp_min);
  EXPECT_EQ(costs.fp_cost(1e12), costs.fp_max);
  std::uint8_t prev = 0;
  for (double v = 0.0; v <= costs.fp_value_ref * 1.5; v += costs.fp_value_ref / 50) {
    const auto c = costs.fp_cost(v);
    EXPECT_GE(c, prev);
    EXPECT_LT(c, costs.blocking);
    prev = c;
  }
}

TEST(AssemblePlan, ClassesAndCosts)
{
  GridGeometry geom(30, 0.1);
  Grid<double> tp(geom, 0.0), fp(geom, 0.0);
  FNMap fn(geom);
  tp(10, 10) = 900.0;
  fn.insert({20, 20}, FnCell{true, true, 0, 0.0, 0.0});
  fp(10, 11) = 300.0;   // under the tp inflation
  fp(2, 2) = 300.0;
  const PlanCosts costs;
  const auto infl = inflate_uniform(tp, fn, 1);
  const auto plan = assemble_plan(infl, fp, costs, &tp, &fn, InflationMode::uniform);
  EXPECT_EQ(plan.cls(10, 10), PlanClass::tp);
  EXPECT_EQ(plan.cls(20, 20), PlanClass::fn);
  EXPECT_EQ(plan.cls(10, 11), PlanClass::inflated);
  EXPECT_EQ(plan.cost(10, 11), costs.blocking);
  EXPECT_EQ(plan.cls(2, 2), PlanClass::fp);
  EXPECT_EQ(plan.cost(2, 2), costs.fp_cost(300.0));
  EXPECT_FALSE(plan.blocking(2, 2));
  EXPECT_EQ(plan.cls(0, 29), PlanClass::free);
  EXPECT_EQ(plan.cost(0, 29), 0);
  EXPECT_EQ(plan.mode(), InflationMode::uniform);
}

TEST(AssemblePlan, NoPassableCellsMeansInflationOnly)
{
  GridGeometry geom(40, 0.1);
  const auto tp = random_tp(geom, 31, 0.04);
  const auto infl = inflate_uniform(tp, FNMap(geom), 2);
  const auto plan = assemble_plan(infl, Grid<double>(geom, 0.0), PlanCosts{});
  for (int r = 0; r < 40; ++r) {
    for (int c = 0; c < 40; ++c) {
      EXPECT_EQ(plan.cost(r, c), infl(r, c) ? 255 : 0);
    }
  }
  PlanCosts bad;
  bad.fp_max = 255;
  EXPECT_THROW(assemble_plan(infl, Grid<double>(geom, 0.0), bad), std::invalid_argument);
}

TEST(AssemblePlan, SimulatedGrassIsTraversableAndTreeBlocks)
{
  GridGeometry geom(200, 0.1);
  LidarConfig cfg;
  const std::vector<Primitive> grass_only{{Box{1.0, -1.5, 0.0, 4.0, 1.5, 0.5}, Material::grass(), true, "grass"}};
  auto with_tree = grass_only;
  with_tree.push_back({Cylinder{2.5, 0.0, 0.15, 0.0, 3.0}, Material::bark(), false, "trunk"});
  RobotState robot;
  const auto params = ClassifierParams::from_fraction(0.5, cfg.max_intensity);

  auto plan_for = [&](const std::vector<Primitive> & scene) {
      const auto classes = classify(build_multilayer(cast_scan(scene, robot, cfg), LayerSpec{}, geom), params);
      const FNMap none(geom);
      return assemble_plan(inflate(classes.tp, none, build_kernel(1.0, 0.0, 11, 2)), classes.fp, PlanCosts{},
               &classes.tp, &none);
    };

  const auto grass_plan = plan_for(grass_only);
  int grass_cells = 0;
  for (int r = 0; r < geom.n(); ++r) {
    for (int c = 0; c < geom.n(); ++c) {
      EXPECT_FALSE(grass_plan.blocking(r, c)) << r << "," << c;
      grass_cells += grass_plan.cls(r, c) == PlanClass::fp;
    }
  }
  EXPECT_GT(grass_cells, 50);

  const auto tree_plan = plan_for(with_tree);
  const Cylinder trunk{2.5, 0.0, 0.15, 0.0, 3.0};
  int trunk_blocking = 0, far_grass = 0;
  for (int r = 0; r < geom.n(); ++r) {
    for (int c = 0; c < geom.n(); ++c) {
      const auto lo = geom.cell_to_world(r, c);
      if (tree_plan.cls(r, c) == PlanClass::tp) {
        EXPECT_TRUE(footprint_touches_cell(trunk, robot.pose, lo.x_low, lo.y_low, geom.g()));
        ++trunk_blocking;
      }
      const auto ctr = geom.cell_center(r, c);
      if (std::hypot(ctr.x_low - 2.5, ctr.y_low) > 1.0 && tree_plan.cls(r, c) == PlanClass::fp) {
        ++far_grass;
        EXPECT_FALSE(tree_plan.blocking(r, c));
      }
    }
  }
  EXPECT_GT(trunk_blocking, 0);
  EXPECT_GT(far_grass, 20);
}
