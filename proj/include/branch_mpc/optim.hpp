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

#ifndef BRANCH_MPC__OPTIM_HPP_
#define BRANCH_MPC__OPTIM_HPP_

#include <functional>
#include <span>
#include <vector>

namespace branch_mpc
{

struct BoxLbfgsSettings
{
  int max_iterations{200};
  int memory{8};
  // Stop when ||x - P(x - g)||_inf falls below this.
  double gradient_tolerance{1e-6};
  // Stop after three iterations with relative decrease below this.
  double function_tolerance{1e-12};
};

struct BoxLbfgsResult
{
  int iterations{0};
  int evaluations{0};
  double value{0.0};
  double projected_gradient{0.0};
  bool converged{false};
};

/// Objective callback: returns f(x) and writes the gradient into `grad`.
using GradientObjective = std::function<double(std::span<const double>, std::span<double>)>;

/// Projected L-BFGS for min f(x) s.t. lower <= x <= upper. The quasi-Newton
/// step acts on the free variables; variables held at a bound by the gradient
/// are frozen for the iteration. `x` is projected first and holds the
/// solution on return.
BoxLbfgsResult minimize_box(
  const GradientObjective & objective, std::span<const double> lower,
  std::span<const double> upper, std::vector<double> & x, const BoxLbfgsSettings & settings);

}  // namespace branch_mpc

#endif  // BRANCH_MPC__OPTIM_HPP_
