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

#ifndef BRANCH_MPC__SIM_HPP_
#define BRANCH_MPC__SIM_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "branch_mpc/baselines.hpp"
#include "branch_mpc/config.hpp"

namespace branch_mpc
{

struct SimConfig
{
  ScenarioConfig scenario;
  PlannerKind planner{PlannerKind::Branch};
  // Distribution of the HV's hidden post-branching policy, one entry per child.
  std::vector<double> truth;
  int trials{1};
  std::uint64_t seed{0};
  int max_steps{75};

  /// Throws ConfigError on an invalid distribution or trial count.
  void validate() const;
};

/// Builds a SimConfig from the scenario's own sim settings.
SimConfig make_sim_config(
  const ScenarioConfig & scenario, PlannerKind planner, std::uint64_t seed, int trials = 1);

struct TraceRow
{
  int step{0};
  double t{0.0};
  VehicleState av;
  VehicleState hv;
  double u_av{0.0};
  double u_hv{0.0};
  double stage_cost{0.0};
  // Child probabilities the planner used this cycle.
  std::vector<double> probabilities;
  bool fallback{false};
};

enum class EventKind {
  TruthDrawn,
  Branching,
  Detection,
  AvConflictEntry,
  HvConflictEntry,
  Collision,
  Fallback,
};

std::string_view to_string(EventKind kind);

struct Event
{
  int step{0};
  EventKind kind{EventKind::Branching};
  std::string detail;
};

struct TrialResult
{
  PlannerKind planner{PlannerKind::Branch};
  std::uint64_t seed{0};
  // Child id and name of the realized HV policy; unset if never drawn.
  std::optional<int> truth;
  std::string truth_name;
  std::vector<TraceRow> trace;
  // Final states after the last applied input.
  VehicleState av_final;
  VehicleState hv_final;
  double total_cost{0.0};
  std::vector<Event> events;
  bool collision{false};
  int fallback_count{0};
  // Smallest exact margin met along the realized trajectory [m].
  double min_margin{0.0};
};

/// One closed-loop trial. The HV's hidden policy is drawn from the trial RNG
/// when the branching agent reaches s_br and is revealed to the planner
/// dt_obs later.
TrialResult run_closed_loop(const SimConfig & config, std::uint64_t seed);

/// Seed of trial `index` derived from the sweep seed.
std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t index);

/// Realized child index for a uniform draw `u` in [0, 1).
std::size_t sample_branch(std::span<const double> distribution, double u);

struct SweepCell
{
  double probability{0.0};
  PlannerKind planner{PlannerKind::Branch};
  double mean_cost{0.0};
  double std_cost{0.0};
  int n{0};
  int collisions{0};
  int fallbacks{0};
  // Realized cost of every trial, by trial index.
  std::vector<double> costs;
};

struct SweepConfig
{
  ScenarioConfig scenario;
  std::vector<PlannerKind> planners{
    PlannerKind::Branch, PlannerKind::Robust, PlannerKind::Prescient, PlannerKind::Contingency};
  std::vector<double> grid;
  int trials{200};
  std::uint64_t seed{0};
  // Worker threads; 0 uses the hardware concurrency.
  unsigned threads{0};
};

struct SweepResult
{
  std::vector<SweepCell> cells;

  const SweepCell & cell(double probability, PlannerKind planner) const;
};

/// Truth distribution with `p` on `branch` and 1 - p spread evenly over the rest.
std::vector<double> sweep_distribution(std::size_t children, std::size_t branch, double p);

/// Closed-loop cost of every planner for every grid probability with common
/// random numbers: trial i uses the same truth draw for every planner and
/// cell. With sim.sweep_belief the planners' fixed probabilities follow the
/// swept distribution; otherwise only the ground truth changes.
SweepResult run_sweep(const SweepConfig & config);

}  // namespace branch_mpc

#endif  // BRANCH_MPC__SIM_HPP_
