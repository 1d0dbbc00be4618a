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

#include "branch_mpc/policies.hpp"

#include <algorithm>
#include <stdexcept>

namespace branch_mpc
{

namespace
{

template <class... Ts>
struct Overloaded : Ts...
{
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// Saturates a linear law; the gradient is zeroed when the clamp is active.
double saturate(double u, const InteractionParams & p, PolicyGradient * grad)
{
  if (u < -p.b_max) {
    if (grad) *grad = {};
    return -p.b_max;
  }
  if (u > p.a_max) {
    if (grad) *grad = {};
    return p.a_max;
  }
  return u;
}

double track(double v_ref, const VehicleState & hv, const InteractionParams & p, PolicyGradient * g)
{
  if (g) *g = {0.0, -p.k_v, 0.0, 0.0};
  return saturate(p.k_v * (v_ref - hv.v), p, g);
}

}  // namespace

void InteractionParams::validate() const
{
  if (!(d_ref > 0.0)) throw std::invalid_argument("InteractionParams: d_ref must be > 0");
  if (!(k_v > 0.0) || !(k_d > 0.0)) {
    throw std::invalid_argument("InteractionParams: gains must be > 0");
  }
  if (!(b_max > 0.0)) throw std::invalid_argument("InteractionParams: b_max must be > 0");
  if (!(a_max >= 0.0)) throw std::invalid_argument("InteractionParams: a_max must be >= 0");
}

std::string_view policy_kind_name(const PolicyKind & kind)
{
  return std::visit(
    Overloaded{
      [](const ConstantSpeed &) { return std::string_view{"constant_speed"}; },
      [](const VelocityTrack &) { return std::string_view{"velocity_track"}; },
      [](const VelocityAdapt &) { return std::string_view{"velocity_adapt"}; },
      [](const Stop &) { return std::string_view{"stop"}; },
      [](const Cross &) { return std::string_view{"cross"}; }},
    kind);
}

bool depends_on_av(const PolicyKind & kind)
{
  return std::holds_alternative<VelocityAdapt>(kind);
}

ControlInput policy_accel(
  const PolicyKind & kind, const VehicleState & hv, const VehicleState & av,
  const ScenarioGeometry & geometry, PolicyGradient * grad)
{
  if (grad) *grad = {};
  const double u = std::visit(
    Overloaded{
      [](const ConstantSpeed &) { return 0.0; },
      [&](const VelocityTrack & p) { return track(p.v_ref, hv, p.gains, grad); },
      [&](const Cross & p) { return track(p.v_ref, hv, p.gains, grad); },
      [&](const VelocityAdapt & p) {
        const auto & ip = p.interaction;
        const double u_free = ip.k_v * (p.v_ref - hv.v);
        // Reacts only once the AV has entered the shared lane ahead of the HV.
        const bool av_ahead = geometry.kind != ScenarioKind::TrafficLight &&
          av.s >= geometry.s_conflict && av.s > hv.s;
        if (!av_ahead) {
          return track(p.v_ref, hv, ip, grad);
        }
        const double gap = av.s - hv.s;
        const double u_follow = ip.k_d * (gap - ip.d_ref) + ip.k_v * (av.v - hv.v);
        if (u_follow < u_free) {
          if (grad) *grad = {-ip.k_d, -ip.k_v, ip.k_d, ip.k_v};
          return saturate(u_follow, ip, grad);
        }
        return track(p.v_ref, hv, ip, grad);
      },
      [&](const Stop & p) {
        const auto & ip = p.interaction;
        const double u_stop = ip.k_d * (p.stop_line_s - hv.s) - ip.k_v * hv.v;
        if (u_stop >= 0.0) {
          return 0.0;
        }
        if (grad) *grad = {-ip.k_d, -ip.k_v, 0.0, 0.0};
        return saturate(u_stop, ip, grad);
      }},
    kind);
  return {u};
}

ControlInput hv_input(
  const VehicleState & hv, const VehicleState & av, const ScenarioGeometry & geometry,
  const PolicyKind & before, const PolicyKind & after, PolicyGradient * grad)
{
  return policy_accel(hv.s < geometry.s_br ? before : after, hv, av, geometry, grad);
}

double predicted_hv_braking(std::span<const VehicleState> hv_leg, double dt)
{
  double worst = 0.0;
  for (std::size_t k = 1; k < hv_leg.size(); ++k) {
    worst = std::max(worst, (hv_leg[k - 1].v - hv_leg[k].v) / dt);
  }
  return worst;
}

}  // namespace branch_mpc
