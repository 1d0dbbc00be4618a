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

#ifndef BRANCH_MPC__TREE_HPP_
#define BRANCH_MPC__TREE_HPP_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "branch_mpc/dynamics.hpp"
#include "branch_mpc/policies.hpp"

namespace branch_mpc
{

struct ScenarioConfig;

/// Sampling grid of one planning cycle. `start_step` is the absolute
/// closed-loop step at which the plan begins.
struct TimeGrid
{
  double dt{0.2};
  int horizon_steps{50};
  int start_step{0};

  DiscretizationParams discretization() const { return {dt, horizon_steps}; }
};

/// One branch of a depth-one scenario tree. Step indices are plan-relative
/// state indices; the root covers [0, t_br] and each child (t_br, horizon].
struct BranchNode
{
  int id{0};
  std::string name;
  PolicyKind policy{ConstantSpeed{}};
  double probability{1.0};
  int t_start{0};
  int t_end{0};
  std::optional<int> parent;
};

struct ScenarioTree
{
  BranchNode root;
  std::vector<BranchNode> children;
  int t_br{0};
  int dt_obs_steps{0};
  int horizon{0};
  // Set once the true branch has been revealed and the tree collapsed.
  std::optional<int> truth;

  std::size_t num_children() const { return children.size(); }
  /// Index into `children` of the branch with the given id.
  std::size_t child_index(int id) const;
  std::vector<double> child_probabilities() const;
  void set_child_probabilities(std::span<const double> probabilities);
  /// Throws std::invalid_argument when an invariant is broken.
  void validate() const;
};

/// Smallest k such that the HV, rolled forward under `root_policy`, has
/// s >= s_br at step k. Returns grid.horizon_steps if never reached.
int estimate_branching_step(
  const VehicleState & hv, const PolicyKind & root_policy, double s_br, const TimeGrid & grid);

/// First index whose s reaches `s_threshold`, or trajectory.size() - 1 when it
/// is never reached (used for AV-triggered branching).
int first_crossing_step(std::span<const VehicleState> trajectory, double s_threshold);

/// Root plus one child per configured post-branching policy. Probabilities
/// come from the fixed decision mode (CrossingFrequency starts uniform and is
/// updated by the planner). When the branching is triggered by the AV
/// (traffic light) the branching step is taken from `av_guess`, or from a
/// constant-speed AV rollout when no guess is given.
ScenarioTree build_tree(
  const ScenarioConfig & config, const TimeGrid & grid, const VehicleState & hv,
  const VehicleState & av, std::span<const VehicleState> av_guess = {});

/// Puts all probability on `true_branch`; the root and the other children
/// get probability 0. Requires t_now >= t_br + dt_obs_steps.
ScenarioTree collapse_to_truth(const ScenarioTree & tree, int true_branch, int t_now);

}  // namespace branch_mpc

#endif  // BRANCH_MPC__TREE_HPP_
