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

#include "branch_mpc/decision.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace branch_mpc
{

namespace
{
constexpr double kMinArrivalSpeed = 0.1;  // [m/s]
}

void DecisionModelParams::validate(std::size_t num_children) const
{
  if (mode == DecisionMode::FixedProbabilities) {
    if (fixed_probabilities.size() != num_children) {
      throw std::invalid_argument(
        "decision.probabilities: expected " + std::to_string(num_children) + " entries, got " +
        std::to_string(fixed_probabilities.size()));
    }
    double sum = 0.0;
    for (double p : fixed_probabilities) {
      if (!(p >= 0.0 && p <= 1.0)) {
        throw std::invalid_argument("decision.probabilities: entries must lie in [0, 1]");
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw std::invalid_argument("decision.probabilities: entries must sum to 1");
    }
    return;
  }
  if (!(beta > 0.0)) throw std::invalid_argument("decision.beta: must be > 0");
  if (!(tta_mid > 0.0)) throw std::invalid_argument("decision.tta_mid: must be > 0");
  if (num_children != 2) {
    throw std::invalid_argument(
      "decision.mode: crossing_frequency requires exactly 2 child branches, tree has " +
      std::to_string(num_children));
  }
  const auto n = static_cast<int>(num_children);
  if (cross_branch < 0 || cross_branch >= n || stop_branch < 0 || stop_branch >= n ||
    cross_branch == stop_branch)
  {
    throw std::invalid_argument("decision: cross_branch/stop_branch must be distinct children");
  }
}

double crossing_probability(double tta_av, const DecisionModelParams & params)
{
  if (std::isinf(tta_av) && tta_av > 0.0) {
    return 1.0;
  }
  // Written so that exp never overflows.
  const double z = params.beta * (tta_av - params.tta_mid);
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double time_to_arrival(
  std::span<const VehicleState> av_trajectory, int t_br, double s_conflict, double dt)
{
  if (av_trajectory.empty()) {
    throw std::invalid_argument("time_to_arrival: empty trajectory");
  }
  const auto n = static_cast<int>(av_trajectory.size());
  const int start = std::clamp(t_br, 0, n - 1);
  for (int k = 0; k <= start; ++k) {
    if (av_trajectory[k].s >= s_conflict) {
      return 0.0;
    }
  }
  for (int k = start + 1; k < n; ++k) {
    const auto & a = av_trajectory[k - 1];
    const auto & b = av_trajectory[k];
    if (b.s >= s_conflict) {
      const double frac = (s_conflict - a.s) / (b.s - a.s);
      return (k - 1 - start + frac) * dt;
    }
  }
  const auto & last = av_trajectory.back();
  return (n - 1 - start) * dt + (s_conflict - last.s) / std::max(last.v, kMinArrivalSpeed);
}

std::vector<double> branch_probabilities(
  const ScenarioTree & tree, std::span<const VehicleState> av_plan_prefix,
  std::span<const VehicleState> /*hv_prefix*/, const DecisionModelParams & params,
  double s_conflict, double dt)
{
  params.validate(tree.num_children());
  if (params.mode == DecisionMode::FixedProbabilities) {
    return params.fixed_probabilities;
  }
  const double tta = time_to_arrival(av_plan_prefix, tree.t_br, s_conflict, dt);
  const double p_cross = crossing_probability(tta, params);
  std::vector<double> probabilities(tree.num_children(), 0.0);
  probabilities[params.cross_branch] = p_cross;
  probabilities[params.stop_branch] = 1.0 - p_cross;
  return probabilities;
}

}  // namespace branch_mpc
