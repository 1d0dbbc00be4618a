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

#ifndef BRANCH_MPC__PLANNER_HPP_
#define BRANCH_MPC__PLANNER_HPP_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "branch_mpc/config.hpp"
#include "branch_mpc/dynamics.hpp"
#include "branch_mpc/tree.hpp"

namespace branch_mpc
{

enum class ObjectiveKind {
  // sum_j P_j J_j, root counted once
  Expected,
  // max_j J_j over the enforced legs
  MinMax,
};

/// How the tree is turned into a decision vector.
struct TranscriptionOptions
{
  ObjectiveKind objective{ObjectiveKind::Expected};
  // Every child shares every input (robust MPC).
  bool share_all{false};
  // Per-child cost weights; defaults to the child probabilities.
  std::optional<std::vector<double>> leg_weights;
  // Per-child constraint flags; defaults to probability > 0.
  std::optional<std::vector<bool>> enforce;
};

/// A Branch MPC problem in single-shooting form. The decision vector holds
/// the root inputs [0, t_br), one shared block [t_br, t_br + shared_steps)
/// used by every child, then child_steps private inputs per child. HV states
/// are not decision variables; they are re-simulated under each child's
/// policy from the AV trajectory.
struct Transcription
{
  ScenarioTree tree;
  ScenarioGeometry geometry;
  CostWeights weights;
  PlannerConstraints constraints;
  PolicyKind hv_before{ConstantSpeed{}};
  double dt{0.2};
  int horizon{0};
  VehicleState av_init;
  VehicleState hv_init;
  double u_prev{0.0};

  int t_br{0};
  int shared_steps{0};
  int child_steps{0};
  ObjectiveKind objective{ObjectiveKind::Expected};
  double root_weight{1.0};
  std::vector<double> leg_weights;
  std::vector<bool> enforced;
  std::vector<std::string> warnings;

  int num_legs() const { return static_cast<int>(leg_weights.size()); }
  int dimension() const;
  /// Position in the decision vector of input k on leg j.
  int index(int leg, int k) const;
  /// A leg contributes to the objective or to the constraints.
  bool active(int leg) const { return leg_weights[leg] > 0.0 || enforced[leg]; }
  std::vector<double> lower_bounds() const;
  std::vector<double> upper_bounds() const;
};

Transcription transcribe(
  const ScenarioTree & tree, const ScenarioConfig & config, const VehicleState & hv_init,
  const VehicleState & av_init, double u_prev, const TranscriptionOptions & options = {});

/// Per-step exact safety margin between an AV leg and the HV leg predicted
/// under `hv_policy` [m]; +inf where no constraint applies. Negative means
/// violation. `d_safe` is the merging separation and the intersection
/// exclusion magnitude. For the traffic light, legs whose policy is Stop are
/// bounded by the stop line.
std::vector<double> collision_margin(
  std::span<const VehicleState> av_leg, std::span<const VehicleState> hv_leg,
  const ScenarioGeometry & geometry, double d_safe, const PolicyKind & hv_policy);

/// Simulated leg of a decision vector (states 0..horizon, inputs 0..horizon-1).
struct LegTrajectory
{
  std::vector<double> u_av;
  std::vector<double> u_hv;
  std::vector<VehicleState> av;
  std::vector<VehicleState> hv;
};

struct CostBreakdown
{
  // Objective without safety penalties.
  double cost{0.0};
  // Sum of the squared smoothed violations (unweighted).
  double penalty{0.0};
  std::vector<double> leg_costs;
};

/// Cost and reverse-mode gradient of a transcription. Holds scratch buffers,
/// so one instance must not be shared between threads.
class BranchProblem
{
public:
  explicit BranchProblem(Transcription transcription);

  const Transcription & transcription() const { return tr_; }

  /// Objective + penalty_weight * penalty. `grad` may be empty.
  double evaluate(std::span<const double> z, std::span<double> grad, double penalty_weight) const;
  CostBreakdown breakdown(std::span<const double> z) const;
  LegTrajectory simulate(std::span<const double> z, int leg) const;
  /// Exact margins >= 0 and HV courtesy braking within limits on every
  /// enforced leg. Step 0 and the first HV transition are not controllable
  /// and are skipped.
  bool feasible(std::span<const double> z) const;

private:
  struct LegBuffers
  {
    std::vector<VehicleState> av, hv;
    std::vector<double> u, uh;
    std::vector<StepJacobian> jac_av, jac_hv;
    std::vector<PolicyGradient> jac_pol;
    std::vector<double> g_as, g_av, g_hs, g_hv, g_u;
  };

  void forward(std::span<const double> z, int leg, LegBuffers & b) const;
  double leg_stage_cost(const LegBuffers & b, int k) const;
  double leg_penalty(const LegBuffers & b, int leg, int k) const;
  void add_stage_gradient(LegBuffers & b, int k, double w) const;
  void add_penalty_gradient(LegBuffers & b, int leg, int k, double w) const;
  void backward(LegBuffers & b, int leg, std::span<double> grad) const;

  Transcription tr_;
  mutable std::vector<LegBuffers> legs_;
};

/// Scalar objective and gradient of a transcription at `z`.
double evaluate_cost(
  const Transcription & transcription, std::span<const double> z, std::span<double> grad,
  double penalty_weight);

struct SolverDiagnostics
{
  int iterations{0};
  int continuations{0};
  int candidates{0};
  double penalty_weight{0.0};
  double penalty_residual{0.0};
  double cost{0.0};
  bool converged{false};
  bool feasible{false};
  bool fallback{false};
  int probability_rounds{0};
  bool probabilities_converged{true};
  std::vector<std::string> warnings;
};

struct PlanLeg
{
  int branch_id{0};
  std::string name;
  double probability{0.0};
  double weight{0.0};
  bool enforced{false};
  std::vector<double> u_av;
  std::vector<double> u_hv;
  std::vector<VehicleState> av;
  std::vector<VehicleState> hv;
};

struct BranchPlan
{
  std::vector<PlanLeg> legs;
  int t_br{0};
  int dt_obs_steps{0};
  int shared_steps{0};
  std::vector<double> decision;
  SolverDiagnostics diagnostics;

  const PlanLeg & leg(int branch_id) const;
};

/// Full input sequences per branch id, used to seed the next solve.
struct WarmStart
{
  std::vector<int> branch_ids;
  std::vector<std::vector<double>> inputs;

  /// Previous plan advanced by one step, last input held.
  static WarmStart shifted(const BranchPlan & plan);
};

/// Locally optimal plan by projected L-BFGS with penalty continuation.
/// Returns the best candidate passing the exact feasibility check, or a
/// braking fallback flagged in the diagnostics.
BranchPlan solve(
  const Transcription & transcription, const SolverSettings & settings,
  const WarmStart * warm_start = nullptr);

/// Plan whose every leg brakes at the fallback deceleration.
BranchPlan fallback_plan(const Transcription & transcription);

/// First AV input to apply: the root input while the root is still ahead of
/// `t_now`, otherwise the active child's (true branch, else highest
/// probability, ties to the lowest id).
ControlInput extract_control(const BranchPlan & plan, const ScenarioTree & tree, int t_now = 0);

struct FixedPointResult
{
  BranchPlan plan;
  ScenarioTree tree;
  std::vector<double> probabilities;
  std::vector<std::vector<double>> history;
  int rounds{0};
  bool converged{true};
};

/// Alternates solve and decision-model updates until the child
/// probabilities move less than settings.probability_tolerance.
FixedPointResult probability_fixed_point(
  const ScenarioTree & tree, const ScenarioConfig & config, const VehicleState & hv_init,
  const VehicleState & av_init, double u_prev, const WarmStart * warm_start = nullptr,
  const TranscriptionOptions & options = {});

/// AV states common to every leg: root and observation window.
std::vector<VehicleState> common_prefix(const BranchPlan & plan);

}  // namespace branch_mpc

#endif  // BRANCH_MPC__PLANNER_HPP_
