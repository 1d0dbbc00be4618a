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

#ifndef BRANCH_MPC__POLICIES_HPP_
#define BRANCH_MPC__POLICIES_HPP_

#include <span>
#include <string_view>
#include <variant>

#include "branch_mpc/dynamics.hpp"
#include "branch_mpc/scenario.hpp"

namespace branch_mpc
{

/// Feedback gains and limits of a human driving policy.
struct InteractionParams
{
  double d_ref{20.0};  // desired headway [m]
  double k_v{1.0};     // velocity gain [1/s]
  double k_d{0.5};     // headway gain [1/s^2]
  double b_max{4.0};   // maximum credible braking [m/s^2]
  double a_max{3.0};   // maximum acceleration [m/s^2]

  void validate() const;

  bool operator==(const InteractionParams &) const = default;
};

struct ConstantSpeed
{
  bool operator==(const ConstantSpeed &) const = default;
};

/// Tracks v_ref and ignores the AV.
struct VelocityTrack
{
  double v_ref{0.0};
  InteractionParams gains{};

  bool operator==(const VelocityTrack &) const = default;
};

/// Tracks v_ref, but regulates the headway to an AV that has entered the
/// shared lane ahead of it.
struct VelocityAdapt
{
  double v_ref{0.0};
  InteractionParams interaction{};

  bool operator==(const VelocityAdapt &) const = default;
};

/// Headway regulation toward a stationary virtual object at the stop line.
/// Never accelerates.
struct Stop
{
  double stop_line_s{0.0};
  InteractionParams interaction{};

  bool operator==(const Stop &) const = default;
};

/// Keeps driving through the conflict region at v_ref; ignores the AV.
struct Cross
{
  double v_ref{0.0};
  InteractionParams gains{};

  bool operator==(const Cross &) const = default;
};

using PolicyKind = std::variant<ConstantSpeed, VelocityTrack, VelocityAdapt, Stop, Cross>;

std::string_view policy_kind_name(const PolicyKind & kind);
bool depends_on_av(const PolicyKind & kind);

/// d(u^H) / d(s^H, v^H, s^A, v^A), valid almost everywhere.
struct PolicyGradient
{
  double hv_s{0.0};
  double hv_v{0.0};
  double av_s{0.0};
  double av_v{0.0};
};

/// HV acceleration commanded by `kind`. Output is clamped to [-b_max, a_max]
/// of the policy (ConstantSpeed always returns 0).
ControlInput policy_accel(
  const PolicyKind & kind, const VehicleState & hv, const VehicleState & av,
  const ScenarioGeometry & geometry, PolicyGradient * grad = nullptr);

/// Piecewise human input: `before` while hv.s < s_br, `after` from s_br on.
ControlInput hv_input(
  const VehicleState & hv, const VehicleState & av, const ScenarioGeometry & geometry,
  const PolicyKind & before, const PolicyKind & after, PolicyGradient * grad = nullptr);

/// Largest deceleration implied by consecutive velocities of an HV leg [m/s^2].
/// Returns 0 when the leg never slows down.
double predicted_hv_braking(std::span<const VehicleState> hv_leg, double dt);

}  // namespace branch_mpc

#endif  // BRANCH_MPC__POLICIES_HPP_
