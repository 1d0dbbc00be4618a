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

#ifndef BRANCH_MPC__BASELINES_HPP_
#define BRANCH_MPC__BASELINES_HPP_

#include <optional>
#include <string_view>
#include <vector>

#include "branch_mpc/config.hpp"
#include "branch_mpc/planner.hpp"
#include "branch_mpc/tree.hpp"

namespace branch_mpc
{

enum class PlannerKind { Branch, Robust, Prescient, Contingency };

std::string_view to_string(PlannerKind kind);
/// Accepts branch, robust, prescient and contingency.
PlannerKind planner_kind_from_string(std::string_view name);

/// One shared input sequence for every branch, all constraints enforced,
/// worst-case branch cost. Plans on the true branch once it is known.
BranchPlan robust_plan(
  const ScenarioTree & tree, const ScenarioConfig & config, const VehicleState & hv,
  const VehicleState & av, double u_prev, const WarmStart * warm_start = nullptr);

/// Single-branch MPC on the true outcome.
BranchPlan prescient_plan(
  const ScenarioTree & tree, int true_branch, const ScenarioConfig & config,
  const VehicleState & hv, const VehicleState & av, double u_prev,
  const WarmStart * warm_start = nullptr);

/// Branch transcription with unit cost on the nominal branch and zero cost on
/// the others, whose constraints stay enforced.
BranchPlan contingency_plan(
  const ScenarioTree & tree, int nominal_branch, const ScenarioConfig & config,
  const VehicleState & hv, const VehicleState & av, double u_prev,
  const WarmStart * warm_start = nullptr);

/// Branch MPC, including the probability fixed point when the decision model
/// depends on the plan.
FixedPointResult branch_plan(
  const ScenarioTree & tree, const ScenarioConfig & config, const VehicleState & hv,
  const VehicleState & av, double u_prev, const WarmStart * warm_start = nullptr);

/// What a planner knows at the start of a closed-loop cycle.
struct CycleInput
{
  VehicleState hv;
  VehicleState av;
  double u_prev{0.0};
  // Branch id revealed to the planner, once observed.
  std::optional<int> revealed;
  // Branch id only the prescient planner may use.
  std::optional<int> oracle;
  // Remaining observation delay when branching already happened.
  std::optional<int> obs_steps;
  const WarmStart * warm_start{nullptr};
};

struct CycleOutput
{
  BranchPlan plan;
  ScenarioTree tree;
  ControlInput control;
};

/// Builds the tree for the current states and runs the chosen planner. For the
/// traffic light the AV-triggered branching step is re-estimated from the plan
/// until it settles.
CycleOutput plan_cycle(PlannerKind kind, const ScenarioConfig & config, const CycleInput & in);

}  // namespace branch_mpc

#endif  // BRANCH_MPC__BASELINES_HPP_
