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

#ifndef BRANCH_MPC__DYNAMICS_HPP_
#define BRANCH_MPC__DYNAMICS_HPP_

#include <span>
#include <vector>

namespace branch_mpc
{

/// Longitudinal state of one vehicle on its centerline path.
struct VehicleState
{
  double s{0.0};  // [m]
  double v{0.0};  // [m/s], never negative

  bool operator==(const VehicleState &) const = default;
};

/// Longitudinal acceleration command [m/s^2].
struct ControlInput
{
  double u{0.0};
};

struct DiscretizationParams
{
  double dt{0.2};
  int horizon_steps{50};

  void validate() const;
};

/// Partial derivatives of one exact step with respect to (s, v, u).
/// ds'/ds is always 1 and dv'/ds always 0, so they are not stored.
struct StepJacobian
{
  double ds_dv{0.0};
  double ds_du{0.0};
  double dv_dv{0.0};
  double dv_du{0.0};
};

/// Exact zero-order-hold step of the double integrator. A vehicle that would
/// reverse within the step halts at its stopping point instead.
/// Throws std::invalid_argument on non-finite data, v < 0 or dt <= 0.
VehicleState step(const VehicleState & state, ControlInput input, double dt);

/// Unchecked variant used inside the solver loop; also fills the Jacobian.
VehicleState step_unchecked(const VehicleState & state, double u, double dt, StepJacobian * jac);

/// Returns inputs.size() + 1 states, the first being `initial`.
std::vector<VehicleState> rollout(
  const VehicleState & initial, std::span<const ControlInput> inputs, double dt);

}  // namespace branch_mpc

#endif  // BRANCH_MPC__DYNAMICS_HPP_
