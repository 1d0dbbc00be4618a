// Copyright 2026 The branch_mpc Authors
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

#include <stdexcept>
#include <vector>

#include "branch_mpc/baselines.hpp"
#include "test_support.hpp"

namespace branch_mpc
{
namespace
{

using test::bundled;

ScenarioTree make_tree(const ScenarioConfig & config, const VehicleState & hv, const VehicleState & av)
{
  return build_tree(config, {config.dt, config.horizon_steps(), 0}, hv, av);
}

double plan_cost(const BranchPlan & plan) { return plan.diagnostics.cost; }

CycleInput cycle_input(const VehicleState & hv, const VehicleState & av)
{
  CycleInput in;
  in.hv = hv;
  in.av = av;
  return in;
}

TEST(Baselines, PlannerNames)
{
  for (auto k : {PlannerKind::Branch, PlannerKind::Robust, PlannerKind::Prescient,
                 PlannerKind::Contingency}) {
    EXPECT_EQ(planner_kind_from_string(to_string(k)), k);
  }
  EXPECT_THROW(planner_kind_from_string("oracle"), std::invalid_argument);
}

TEST(Baselines, RobustGoesBehindEveryMergingMode)
{
  const auto config = bundled("merging.json");
  const auto tree = make_tree(config, config.hv_init, config.av_init);
  const auto plan = robust_plan(tree, config, config.hv_init, config.av_init, 0.0);
  ASSERT_FALSE(plan.diagnostics.fallback);
  const double sc = config.geometry.s_conflict;
  for (const auto & leg : plan.legs) {
    EXPECT_EQ(leg.u_av, plan.legs.front().u_av);
    EXPECT_GT(test::crossing_time(leg.av, sc, config.dt), test::crossing_time(leg.hv, sc, config.dt))
      << leg.name;
  }
}

TEST(Baselines, RobustStopsAtTheLight)
{
  auto config = bundled("traffic_light.json");
  config.av_init = {20.0, config.weights.v_ref_av};
  const auto out = plan_cycle(PlannerKind::Robust, config, cycle_input(config.hv_init, config.av_init));
  ASSERT_FALSE(out.plan.diagnostics.fallback);
  const auto & red = config.hv_after[1].policy;
  const double line = std::get<Stop>(red).stop_line_s;
  for (const auto & leg : out.plan.legs) {
    for (const auto & x : leg.av) EXPECT_LE(x.s, line);
  }
}

TEST(Baselines, SingleBranchRobustEqualsBranch)
{
  const auto config = test::lone_av_config(1);
  const auto tree = make_tree(config, config.hv_init, config.av_init);
  const auto robust = robust_plan(tree, config, config.hv_init, config.av_init, 0.0);
  const auto branch = branch_plan(tree, config, config.hv_init, config.av_init, 0.0).plan;
  EXPECT_NEAR(plan_cost(robust), plan_cost(branch), 1e-6);
  for (std::size_t k = 0; k < robust.legs[0].u_av.size(); ++k) {
    EXPECT_NEAR(robust.legs[0].u_av[k], branch.legs[0].u_av[k], 1e-4);
  }
}

TEST(Baselines, PrescientEqualsCollapsedBranch)
{
  for (const char * name : {"traffic_light.json", "merging.json", "intersection.json"}) {
    auto config = bundled(name);
    if (config.geometry.kind == ScenarioKind::TrafficLight) config.av_init = {20.0, 12.0};
    const auto tree = make_tree(config, config.hv_init, config.av_init);
    for (const auto & child : tree.children) {
      const auto prescient =
        prescient_plan(tree, child.id, config, config.hv_init, config.av_init, 0.0);
      auto certain = tree;
      std::vector<double> p(tree.num_children(), 0.0);
      p[tree.child_index(child.id)] = 1.0;
      certain.set_child_probabilities(p);
      const auto branch =
        solve(transcribe(certain, config, config.hv_init, config.av_init, 0.0), config.solver);
      EXPECT_NEAR(plan_cost(prescient), plan_cost(branch), 1e-6) << name << " " << child.name;
      EXPECT_EQ(prescient.legs.size(), 1u);
    }
  }
}

TEST(Baselines, PrescientGreenCruisesAndRedStops)
{
  auto config = bundled("traffic_light.json");
  config.av_init = {20.0, config.weights.v_ref_av};
  const auto tree = make_tree(config, config.hv_init, config.av_init);
  const auto green = prescient_plan(tree, 1, config, config.hv_init, config.av_init, 0.0);
  for (const auto & x : green.legs[0].av) EXPECT_NEAR(x.v, config.weights.v_ref_av, 1e-6);
  const auto red = prescient_plan(tree, 2, config, config.hv_init, config.av_init, 0.0);
  ASSERT_FALSE(red.diagnostics.fallback);
  EXPECT_LT(red.legs[0].av.back().v, config.weights.v_ref_av);
}

TEST(Baselines, ContingencyIgnoresProbabilities)
{
  auto config = bundled("traffic_light.json");
  config.av_init = {20.0, config.weights.v_ref_av};
  auto tree = make_tree(config, config.hv_init, config.av_init);
  const auto a = contingency_plan(tree, 1, config, config.hv_init, config.av_init, 0.0);
  tree.set_child_probabilities(std::vector<double>{0.1, 0.9});
  const auto b = contingency_plan(tree, 1, config, config.hv_init, config.av_init, 0.0);
  ASSERT_EQ(a.legs.size(), b.legs.size());
  for (std::size_t j = 0; j < a.legs.size(); ++j) EXPECT_EQ(a.legs[j].u_av, b.legs[j].u_av);
  for (const auto & leg : a.legs) EXPECT_TRUE(leg.enforced);
}

TEST(Baselines, ContingencyNominalLegTracksGreen)
{
  auto config = bundled("traffic_light.json");
  config.av_init = {20.0, config.weights.v_ref_av};
  const auto tree = make_tree(config, config.hv_init, config.av_init);
  const auto plan = contingency_plan(tree, 1, config, config.hv_init, config.av_init, 0.0);
  ASSERT_FALSE(plan.diagnostics.fallback);
  const auto & red = plan.leg(2);
  const double line = std::get<Stop>(config.hv_after[1].policy).stop_line_s;
  for (const auto & x : red.av) EXPECT_LE(x.s, line);
  double hardest = 0.0;
  for (double u : red.u_av) hardest = std::min(hardest, u);
  double nominal_hardest = 0.0;
  for (double u : plan.leg(1).u_av) nominal_hardest = std::min(nominal_hardest, u);
  EXPECT_LT(hardest, nominal_hardest);
}

TEST(Baselines, SingleBranchContingencyEqualsPrescient)
{
  const auto config = test::lone_av_config(1);
  const auto tree = make_tree(config, config.hv_init, config.av_init);
  const auto c = contingency_plan(tree, 1, config, config.hv_init, config.av_init, 0.0);
  const auto p = prescient_plan(tree, 1, config, config.hv_init, config.av_init, 0.0);
  EXPECT_NEAR(plan_cost(c), plan_cost(p), 1e-6);
}

TEST(Baselines, PlanCycleRevealedTruthCollapses)
{
  const auto config = bundled("merging.json");
  auto in = cycle_input({65.0, 12.0}, config.av_init);
  in.revealed = 3;
  for (auto kind : {PlannerKind::Branch, PlannerKind::Robust, PlannerKind::Contingency}) {
    const auto out = plan_cycle(kind, config, in);
    EXPECT_EQ(out.tree.truth, std::optional<int>(3));
    EXPECT_EQ(out.control.u, out.plan.leg(3).u_av[0]) << to_string(kind);
  }
  EXPECT_THROW(
    plan_cycle(PlannerKind::Prescient, config, cycle_input(config.hv_init, config.av_init)),
    std::invalid_argument);
}

}  // namespace
}  // namespace branch_mpc
