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

#ifndef BRANCH_MPC__CONFIG_HPP_
#define BRANCH_MPC__CONFIG_HPP_

#include <stdexcept>
#include <string>
#include <vector>

#include "branch_mpc/decision.hpp"
#include "branch_mpc/dynamics.hpp"
#include "branch_mpc/policies.hpp"
#include "branch_mpc/scenario.hpp"

namespace branch_mpc
{

/// Validation failure that names the offending field.
class ConfigError : public std::runtime_error
{
public:
  ConfigError(const std::string & field, const std::string & message)
  : std::runtime_error(field + ": " + message), field_(field)
  {
  }
  const std::string & field() const { return field_; }

private:
  std::string field_;
};

struct NamedPolicy
{
  std::string name;
  PolicyKind policy;

  bool operator==(const NamedPolicy &) const = default;
};

/// Stage cost weights. The stage cost of one AV step is
///   w_v (v_{t+1} - v_ref)^2 + w_u u_t^2 + w_j (u_t - u_{t-1})^2 - w_p (s_{t+1} - s_t)
struct CostWeights
{
  double w_v{1.0};
  double w_u{1.0};
  double w_j{1.0};
  double w_p{0.0};
  double v_ref_av{12.0};
  // Initial weight of the smoothed safety penalties.
  double collision_weight{100.0};
  // Safety buffer the smoothed penalties keep beyond the exact margins [m].
  double collision_buffer{1.0};

  bool operator==(const CostWeights &) const = default;
};

struct PlannerConstraints
{
  double u_min{-4.0};
  double u_max{3.0};
  double v_max{20.0};
  // Separation in the shared lane / occupancy exclusion magnitude [m].
  double d_safe{10.0};
  // Largest HV deceleration the plan may impose [m/s^2].
  double b_max{4.0};
  // Deceleration of the emergency fallback plan [m/s^2].
  double fallback_decel{4.0};

  bool operator==(const PlannerConstraints &) const = default;
};

struct SolverSettings
{
  int max_iterations{200};
  double tolerance{1e-6};
  int max_continuations{8};
  int max_probability_rounds{5};
  double probability_tolerance{1e-3};
  // Extra initial guesses (full throttle / full brake) for interaction scenarios.
  bool restarts{true};

  bool operator==(const SolverSettings &) const = default;
};

struct SimSettings
{
  int max_steps{75};
  // End the trial once both agents have cleared the conflict region.
  bool stop_when_clear{true};
  // Plan over min(horizon, remaining trial steps) so fixed-duration trials
  // replan consistently instead of postponing a stop every cycle.
  bool shrink_horizon{false};
  // Ground-truth distribution over the post-branching policies.
  std::vector<double> truth;
  // Child whose truth probability is varied by sweeps.
  int sweep_branch{-1};
  // Sweeps also set the planners' fixed probabilities to the swept values.
  bool sweep_belief{true};
  // Child the contingency planner treats as nominal.
  int nominal_branch{0};
  double u_prev{0.0};

  bool operator==(const SimSettings &) const = default;
};

struct ScenarioConfig
{
  ScenarioGeometry geometry{};
  VehicleState av_init{};
  VehicleState hv_init{};
  PolicyKind hv_before{ConstantSpeed{}};
  std::vector<NamedPolicy> hv_after;
  DecisionModelParams decision{};
  CostWeights weights{};
  PlannerConstraints constraints{};
  SolverSettings solver{};
  SimSettings sim{};
  double dt{0.2};
  double horizon{10.0};   // [s]
  double dt_obs{0.6};     // [s]

  int horizon_steps() const;
  int dt_obs_steps() const;
  int sweep_branch() const;
  std::vector<std::string> branch_names() const;
  /// Throws ConfigError naming the field of the first violated constraint.
  void validate() const;

  bool operator==(const ScenarioConfig &) const = default;
};

}  // namespace branch_mpc

#endif  // BRANCH_MPC__CONFIG_HPP_
