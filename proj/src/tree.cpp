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

#include "branch_mpc/tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "branch_mpc/config.hpp"

namespace branch_mpc
{

std::size_t ScenarioTree::child_index(int id) const
{
  for (std::size_t j = 0; j < children.size(); ++j) {
    if (children[j].id == id) {
      return j;
    }
  }
  throw std::invalid_argument("ScenarioTree: unknown branch id " + std::to_string(id));
}

std::vector<double> ScenarioTree::child_probabilities() const
{
  std::vector<double> p;
  p.reserve(children.size());
  for (const auto & c : children) {
    p.push_back(c.probability);
  }
  return p;
}

void ScenarioTree::set_child_probabilities(std::span<const double> probabilities)
{
  if (probabilities.size() != children.size()) {
    throw std::invalid_argument("ScenarioTree: probability count does not match children");
  }
  for (std::size_t j = 0; j < children.size(); ++j) {
    children[j].probability = probabilities[j];
  }
}

void ScenarioTree::validate() const
{
  if (children.empty()) {
    throw std::invalid_argument("ScenarioTree: no child branches");
  }
  if (horizon < 1 || t_br < 0 || t_br > horizon) {
    throw std::invalid_argument("ScenarioTree: branching step outside [0, horizon]");
  }
  if (dt_obs_steps < 0 || t_br + dt_obs_steps > horizon) {
    throw std::invalid_argument("ScenarioTree: observation window exceeds horizon");
  }
  if (root.t_start != 0 || root.t_end != t_br) {
    throw std::invalid_argument("ScenarioTree: root must span [0, t_br]");
  }
  double sum = 0.0;
  for (const auto & c : children) {
    if (c.t_start != t_br + 1 || c.t_end != horizon) {
      throw std::invalid_argument("ScenarioTree: child '" + c.name + "' must span (t_br, horizon]");
    }
    if (!(c.probability >= 0.0 && c.probability <= 1.0)) {
      throw std::invalid_argument("ScenarioTree: child probability outside [0, 1]");
    }
    sum += c.probability;
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    throw std::invalid_argument("ScenarioTree: child probabilities must sum to 1");
  }
}

int estimate_branching_step(
  const VehicleState & hv, const PolicyKind & root_policy, double s_br, const TimeGrid & grid)
{
  if (hv.s >= s_br) {
    return 0;
  }
  // The pre-decision policy never depends on the AV; park it far behind.
  const VehicleState nowhere{-std::numeric_limits<double>::max(), 0.0};
  ScenarioGeometry geometry{};
  geometry.s_conflict = std::numeric_limits<double>::max();
  geometry.s_br = s_br;
  VehicleState x = hv;
  for (int k = 1; k <= grid.horizon_steps; ++k) {
    const double u = policy_accel(root_policy, x, nowhere, geometry).u;
    x = step(x, {u}, grid.dt);
    if (x.s >= s_br) {
      return k;
    }
  }
  return grid.horizon_steps;
}

int first_crossing_step(std::span<const VehicleState> trajectory, double s_threshold)
{
  for (std::size_t k = 0; k < trajectory.size(); ++k) {
    if (trajectory[k].s >= s_threshold) {
      return static_cast<int>(k);
    }
  }
  return static_cast<int>(trajectory.size()) - 1;
}

ScenarioTree build_tree(
  const ScenarioConfig & config, const TimeGrid & grid, const VehicleState & hv,
  const VehicleState & av, std::span<const VehicleState> av_guess)
{
  if (config.hv_after.empty()) {
    throw ConfigError("hv_policies.after", "empty policy set");
  }
  const int horizon = grid.horizon_steps;
  const double s_br = config.geometry.s_br;

  int t_br = 0;
  if (config.geometry.kind == ScenarioKind::TrafficLight) {
    if (av.s >= s_br) {
      t_br = 0;
    } else if (!av_guess.empty()) {
      t_br = av_guess.size() > static_cast<std::size_t>(horizon) + 1 ?
        first_crossing_step(av_guess.first(horizon + 1), s_br) :
        first_crossing_step(av_guess, s_br);
      if (av_guess[t_br].s < s_br) {
        t_br = horizon;
      }
    } else {
      t_br = estimate_branching_step(av, ConstantSpeed{}, s_br, grid);
    }
  } else {
    t_br = estimate_branching_step(hv, config.hv_before, s_br, grid);
  }
  t_br = std::clamp(t_br, 0, horizon);

  ScenarioTree tree;
  tree.horizon = horizon;
  tree.t_br = t_br;
  tree.dt_obs_steps = std::min(config.dt_obs_steps(), horizon - t_br);
  tree.root.id = 0;
  tree.root.name = "root";
  tree.root.policy = config.hv_before;
  tree.root.probability = 1.0;
  tree.root.t_start = 0;
  tree.root.t_end = t_br;

  const auto n = config.hv_after.size();
  for (std::size_t j = 0; j < n; ++j) {
    BranchNode child;
    child.id = static_cast<int>(j) + 1;
    child.name = config.hv_after[j].name;
    child.policy = config.hv_after[j].policy;
    child.probability = config.decision.mode == DecisionMode::FixedProbabilities ?
      config.decision.fixed_probabilities.at(j) :
      1.0 / static_cast<double>(n);
    child.t_start = t_br + 1;
    child.t_end = horizon;
    child.parent = 0;
    tree.children.push_back(std::move(child));
  }
  return tree;
}

ScenarioTree collapse_to_truth(const ScenarioTree & tree, int true_branch, int t_now)
{
  const std::size_t idx = tree.child_index(true_branch);
  if (t_now < tree.t_br + tree.dt_obs_steps) {
    throw std::logic_error(
      "collapse_to_truth: mode is not observable before t_br + dt_obs (t_now=" +
      std::to_string(t_now) + ")");
  }
  ScenarioTree collapsed = tree;
  collapsed.root.probability = 0.0;
  for (std::size_t j = 0; j < collapsed.children.size(); ++j) {
    collapsed.children[j].probability = j == idx ? 1.0 : 0.0;
  }
  collapsed.truth = true_branch;
  return collapsed;
}

}  // namespace branch_mpc
