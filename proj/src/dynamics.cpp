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

#include "branch_mpc/dynamics.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace branch_mpc
{

void DiscretizationParams::validate() const
{
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw std::invalid_argument("DiscretizationParams: dt must be positive and finite");
  }
  if (horizon_steps < 1) {
    throw std::invalid_argument("DiscretizationParams: horizon_steps must be >= 1");
  }
}

VehicleState step_unchecked(const VehicleState & state, double u, double dt, StepJacobian * jac)
{
  const double v_next = state.v + u * dt;
  if (v_next >= 0.0) {
    if (jac) {
      jac->ds_dv = dt;
      jac->ds_du = 0.5 * dt * dt;
      jac->dv_dv = 1.0;
      jac->dv_du = dt;
    }
    return {state.s + state.v * dt + 0.5 * u * dt * dt, v_next};
  }
  // u < 0 here. Halts after t* = -v/u, travelling v^2 / (2|u|).
  if (jac) {
    jac->ds_dv = -state.v / u;
    jac->ds_du = state.v * state.v / (2.0 * u * u);
    jac->dv_dv = 0.0;
    jac->dv_du = 0.0;
  }
  return {state.s - state.v * state.v / (2.0 * u), 0.0};
}

VehicleState step(const VehicleState & state, ControlInput input, double dt)
{
  if (!std::isfinite(state.s) || !std::isfinite(state.v) || !std::isfinite(input.u) ||
    !std::isfinite(dt))
  {
    std::ostringstream msg;
    msg << "step: non-finite input (s=" << state.s << ", v=" << state.v << ", u=" << input.u
        << ", dt=" << dt << ")";
    throw std::invalid_argument(msg.str());
  }
  if (dt <= 0.0) {
    throw std::invalid_argument("step: dt must be positive");
  }
  if (state.v < 0.0) {
    throw std::invalid_argument("step: negative velocity " + std::to_string(state.v));
  }
  return step_unchecked(state, input.u, dt, nullptr);
}

std::vector<VehicleState> rollout(
  const VehicleState & initial, std::span<const ControlInput> inputs, double dt)
{
  if (inputs.empty()) {
    throw std::invalid_argument("rollout: empty input sequence");
  }
  std::vector<VehicleState> states;
  states.reserve(inputs.size() + 1);
  states.push_back(initial);
  for (const auto & input : inputs) {
    states.push_back(step(states.back(), input, dt));
  }
  return states;
}

}  // namespace branch_mpc
