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

#include "branch_mpc/baselines.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace branch_mpc
{

namespace
{

// Traffic-light branching step refinements per cycle.
constexpr int kBranchingRounds = 3;

BranchPlan solve_plain(
  const ScenarioTree & tree, const ScenarioConfig & config, const VehicleState & hv,
  const VehicleState & av, double u_prev, const WarmStart * warm_start,
  const TranscriptionOptions & options = {})
{
  return solve(transcribe(tree, config, hv, av, u_prev, options), config.solver, warm_start);
}

WarmStart unshifted(const BranchPlan & plan)
{
  WarmStart ws;
  for (const auto & leg : plan.legs) {
    ws.branch_ids.push_back(leg.branch_id);
    ws.inputs.push_back(leg.u_av);
  }
  return ws;
}

}  // namespace

std::string_view to_string(PlannerKind kind)
{
  switch (kind) {
    case PlannerKind::Branch:
      return "branch";
    case PlannerKind::Robust:
      return "robust";
    case PlannerKind::Prescient:
      return "prescient";
    case PlannerKind::Contingency:
      return "contingency";
  }
  return "unknown";
}

PlannerKind planner_kind_from_string(std::string_view name)
{
  for (auto k : {PlannerKind::Branch, PlannerKind::Robust, PlannerKind::Prescient,
                 PlannerKind::Contingency}) {
    if (to_string(k) == name) {
      return k;
    }
  }
  throw std::invalid_argument("unknown planner '" + std::string(name) + "'");
}

BranchPlan robust_plan(
  const ScenarioTree & tree, const ScenarioConfig & config, const VehicleState & hv,
  const VehicleState & av, double u_prev, const WarmStart * warm_start)
{
  if (tree.truth) {
    return solve_plain(tree, config, hv, av, u_prev, warm_start);
  }
  TranscriptionOptions options;
  options.objective = ObjectiveKind::MinMax;
  options.share_all = true;
  options.enforce = std::vector<bool>(tree.num_children(), true);
  return solve_plain(tree, config, hv, av, u_prev, warm_start, options);
}

BranchPlan prescient_plan(
  const ScenarioTree & tree, int true_branch, const ScenarioConfig & config,
  const VehicleState & hv, const VehicleState & av, double u_prev,
  const WarmStart * warm_start)
{
  ScenarioTree single = tree;
  single.children = {tree.children.at(tree.child_index(true_branch))};
  single.children.front().probability = 1.0;
  single.truth = true_branch;
  return solve_plain(single, config, hv, av, u_prev, warm_start);
}

BranchPlan contingency_plan(
  const ScenarioTree & tree, int nominal_branch, const ScenarioConfig & config,
  const VehicleState & hv, const VehicleState & av, double u_prev,
  const WarmStart * warm_start)
{
  if (tree.truth) {
    return solve_plain(tree, config, hv, av, u_prev, warm_start);
  }
  TranscriptionOptions options;
  std::vector<double> weights(tree.num_children(), 0.0);
  weights.at(tree.child_index(nominal_branch)) = 1.0;
  options.leg_weights = weights;
  options.enforce = std::vector<bool>(tree.num_children(), true);
  return solve_plain(tree, config, hv, av, u_prev, warm_start, options);
}

FixedPointResult branch_plan(
  const ScenarioTree & tree, const ScenarioConfig & config, const VehicleState & hv,
  const VehicleState & av, double u_prev, const WarmStart * warm_start)
{
  return probability_fixed_point(tree, config, hv, av, u_prev, warm_start);
}

CycleOutput plan_cycle(PlannerKind kind, const ScenarioConfig & config, const CycleInput & in)
{
  const TimeGrid grid{config.dt, config.horizon_steps(), 0};
  const bool light = config.geometry.kind == ScenarioKind::TrafficLight;

  const auto make_tree = [&](std::span<const VehicleState> av_guess) {
    ScenarioTree tree = build_tree(config, grid, in.hv, in.av, av_guess);
    if (in.revealed) {
      tree.dt_obs_steps = 0;
      return collapse_to_truth(tree, *in.revealed, tree.t_br);
    }
    if (in.obs_steps) {
      tree.dt_obs_steps = std::clamp(*in.obs_steps, 0, tree.horizon - tree.t_br);
    }
    return tree;
  };

  const auto run = [&](const ScenarioTree & tree, const WarmStart * ws) {
    switch (kind) {
      case PlannerKind::Branch: {
        auto fp = branch_plan(tree, config, in.hv, in.av, in.u_prev, ws);
        return std::pair{std::move(fp.plan), std::move(fp.tree)};
      }
      case PlannerKind::Robust:
        return std::pair{robust_plan(tree, config, in.hv, in.av, in.u_prev, ws), tree};
      case PlannerKind::Prescient: {
        const auto truth = in.revealed ? in.revealed : in.oracle;
        if (!truth) {
          throw std::invalid_argument("prescient planner needs the true branch");
        }
        auto plan = prescient_plan(tree, *truth, config, in.hv, in.av, in.u_prev, ws);
        ScenarioTree single = tree;
        single.children = {tree.children.at(tree.child_index(*truth))};
        single.children.front().probability = 1.0;
        single.truth = *truth;
        return std::pair{std::move(plan), std::move(single)};
      }
      case PlannerKind::Contingency: {
        const auto nominal = config.sim.nominal_branch;
        const int id = tree.children.at(static_cast<std::size_t>(nominal)).id;
        return std::pair{
          contingency_plan(tree, id, config, in.hv, in.av, in.u_prev, ws), tree};
      }
    }
    throw std::logic_error("plan_cycle: unknown planner");
  };

  std::vector<VehicleState> guess;
  if (light && in.warm_start && !in.warm_start->inputs.empty()) {
    std::vector<ControlInput> u;
    for (double x : in.warm_start->inputs.front()) u.push_back({x});
    if (!u.empty()) guess = rollout(in.av, u, config.dt);
  }
  ScenarioTree tree = make_tree(guess);
  auto [plan, used] = run(tree, in.warm_start);

  if (light && !in.revealed && in.av.s < config.geometry.s_br) {
    for (int round = 1; round < kBranchingRounds; ++round) {
      const auto & av_leg = plan.legs.front().av;
      int t_new = first_crossing_step(av_leg, config.geometry.s_br);
      if (av_leg[t_new].s < config.geometry.s_br) t_new = tree.horizon;
      if (t_new == tree.t_br) break;
      tree = make_tree(av_leg);
      const WarmStart ws = unshifted(plan);
      std::tie(plan, used) = run(tree, &ws);
    }
  }

  CycleOutput out;
  out.control = extract_control(plan, used, 0);
  out.plan = std::move(plan);
  out.tree = std::move(used);
  return out;
}

}  // namespace branch_mpc
