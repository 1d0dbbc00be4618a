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

#ifndef BRANCH_MPC__DECISION_HPP_
#define BRANCH_MPC__DECISION_HPP_

#include <span>
#include <vector>

#include "branch_mpc/dynamics.hpp"
#include "branch_mpc/tree.hpp"

namespace branch_mpc
{

enum class DecisionMode { FixedProbabilities, CrossingFrequency };

/// Human decision model. In CrossingFrequency mode the probability that the
/// HV crosses first is a logistic function of the AV's time-to-arrival at
/// the conflict point, evaluated when the HV reaches the branching point.
struct DecisionModelParams
{
  DecisionMode mode{DecisionMode::FixedProbabilities};
  std::vector<double> fixed_probabilities;
  double beta{1.5};     // logistic slope [1/s]
  double tta_mid{4.0};  // AV time-to-arrival giving P_cross = 0.5 [s]
  // Child indices of the crossing and yielding outcomes.
  int cross_branch{0};
  int stop_branch{1};

  /// Checks the parameters against a tree with `num_children` children.
  void validate(std::size_t num_children) const;

  bool operator==(const DecisionModelParams &) const = default;
};

/// P(HV crosses first | AV time-to-arrival). Non-decreasing in tta_av.
double crossing_probability(double tta_av, const DecisionModelParams & params);

/// Time from step `t_br` until the AV trajectory first reaches s_conflict,
/// interpolated linearly between samples. Zero when already reached by t_br;
/// extrapolated with the terminal speed (floored at 0.1 m/s) when the
/// trajectory ends first.
double time_to_arrival(
  std::span<const VehicleState> av_trajectory, int t_br, double s_conflict, double dt);

/// Child-branch probabilities for `tree`. In fixed mode the configured vector
/// is returned unchanged; otherwise the cross/stop pair is computed from the
/// AV plan prefix. `hv_prefix` is accepted for models that also use the HV
/// state; the logistic model ignores it.
std::vector<double> branch_probabilities(
  const ScenarioTree & tree, std::span<const VehicleState> av_plan_prefix,
  std::span<const VehicleState> hv_prefix, const DecisionModelParams & params,
  double s_conflict, double dt);

}  // namespace branch_mpc

#endif  // BRANCH_MPC__DECISION_HPP_
