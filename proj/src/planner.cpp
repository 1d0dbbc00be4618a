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

#include "branch_mpc/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "branch_mpc/decision.hpp"
#include "branch_mpc/optim.hpp"

namespace branch_mpc
{

namespace
{

constexpr double kInf = std::numeric_limits<double>::infinity();
// Courtesy braking tolerance in the exact check [m/s^2].
constexpr double kBrakingSlack = 1e-9;

double relu(double x) { return x > 0.0 ? x : 0.0; }

// Partial derivatives of a safety penalty with respect to the two positions.
struct SafetyTerm
{
  double value{0.0};
  double d_av_s{0.0};
  double d_hv_s{0.0};
};

SafetyTerm safety_penalty(
  const VehicleState & av, const VehicleState & hv, const ScenarioGeometry & g,
  const PolicyKind & policy, double d_safe, double buffer)
{
  SafetyTerm t;
  switch (g.kind) {
    case ScenarioKind::Merging: {
      // Smooth gate rising over `ramp` metres before the merge point.
      const double ramp = std::max(buffer, 0.5);
      const auto gate = [&](double s, double & slope) {
        const double r = (s - g.s_conflict + ramp) / ramp;
        if (r <= 0.0) {
          slope = 0.0;
          return 0.0;
        }
        if (r >= 1.0) {
          slope = 0.0;
          return 1.0;
        }
        slope = 1.0 / ramp;
        return r;
      };
      double slope_a = 0.0;
      double slope_h = 0.0;
      const double ga = gate(av.s, slope_a);
      const double gh = gate(hv.s, slope_h);
      const double gap = av.s - hv.s;
      const double deficit = d_safe + buffer - std::abs(gap);
      if (ga <= 0.0 || gh <= 0.0 || deficit <= 0.0) {
        return t;
      }
      const double sign = gap >= 0.0 ? 1.0 : -1.0;
      const double d2 = deficit * deficit;
      t.value = ga * gh * d2;
      t.d_av_s = slope_a * gh * d2 - ga * gh * 2.0 * deficit * sign;
      t.d_hv_s = ga * slope_h * d2 + ga * gh * 2.0 * deficit * sign;
      return t;
    }
    case ScenarioKind::Intersection: {
      const double lo = g.s_conflict - buffer;
      const double hi = g.s_conflict + g.conflict_length + buffer;
      const auto depth = [&](double s, double & slope) {
        const double a = s - lo;
        const double b = hi - s;
        if (a < b) {
          slope = 1.0;
          return a;
        }
        slope = -1.0;
        return b;
      };
      double slope_a = 0.0;
      double slope_h = 0.0;
      const double pa = relu(depth(av.s, slope_a));
      const double ph = relu(depth(hv.s, slope_h));
      if (pa <= 0.0 || ph <= 0.0) {
        return t;
      }
      t.value = pa * pa * ph * ph;
      t.d_av_s = 2.0 * pa * ph * ph * slope_a;
      t.d_hv_s = 2.0 * pa * pa * ph * slope_h;
      return t;
    }
    case ScenarioKind::TrafficLight: {
      const auto * stop = std::get_if<Stop>(&policy);
      if (!stop) {
        return t;
      }
      const double over = relu(av.s - (stop->stop_line_s - buffer));
      t.value = over * over;
      t.d_av_s = 2.0 * over;
      return t;
    }
  }
  return t;
}

}  // namespace

// ---------------------------------------------------------------------------
// Transcription

int Transcription::dimension() const
{
  return t_br + shared_steps + num_legs() * child_steps;
}

int Transcription::index(int leg, int k) const
{
  const int common = t_br + shared_steps;
  if (k < common) {
    return k;
  }
  return common + leg * child_steps + (k - common);
}

std::vector<double> Transcription::lower_bounds() const
{
  return std::vector<double>(dimension(), constraints.u_min);
}

std::vector<double> Transcription::upper_bounds() const
{
  return std::vector<double>(dimension(), constraints.u_max);
}

Transcription transcribe(
  const ScenarioTree & tree, const ScenarioConfig & config, const VehicleState & hv_init,
  const VehicleState & av_init, double u_prev, const TranscriptionOptions & options)
{
  Transcription tr;
  tr.tree = tree;
  if (tr.tree.t_br + tr.tree.dt_obs_steps > tr.tree.horizon) {
    const int fitted = std::max(0, tr.tree.horizon - tr.tree.t_br);
    std::ostringstream msg;
    msg << "observation window of " << tr.tree.dt_obs_steps << " steps shrunk to " << fitted
        << " to fit the horizon";
    tr.warnings.push_back(msg.str());
    tr.tree.dt_obs_steps = fitted;
  }
  tr.tree.validate();

  tr.geometry = config.geometry;
  tr.weights = config.weights;
  tr.constraints = config.constraints;
  tr.hv_before = tree.root.policy;
  tr.dt = config.dt;
  tr.horizon = tr.tree.horizon;
  tr.av_init = av_init;
  tr.hv_init = hv_init;
  tr.u_prev = u_prev;
  tr.objective = options.objective;
  tr.t_br = tr.tree.t_br;
  if (options.share_all) {
    tr.shared_steps = tr.horizon - tr.t_br;
    tr.child_steps = 0;
  } else {
    tr.shared_steps = tr.tree.dt_obs_steps;
    tr.child_steps = tr.horizon - tr.t_br - tr.shared_steps;
  }
  // Root inputs are applied whatever the mode, so their cost counts in full.
  tr.root_weight = 1.0;

  const auto n = tr.tree.num_children();
  if (options.leg_weights) {
    if (options.leg_weights->size() != n) {
      throw std::invalid_argument("transcribe: leg weight count does not match children");
    }
    tr.leg_weights = *options.leg_weights;
  } else {
    tr.leg_weights = tr.tree.child_probabilities();
  }
  if (options.enforce) {
    if (options.enforce->size() != n) {
      throw std::invalid_argument("transcribe: enforce flag count does not match children");
    }
    tr.enforced = *options.enforce;
  } else {
    tr.enforced.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      tr.enforced[j] = tr.tree.children[j].probability > 0.0;
    }
  }
  bool any = false;
  for (int j = 0; j < tr.num_legs(); ++j) {
    any = any || tr.active(j);
  }
  if (!any) {
    throw std::invalid_argument("transcribe: no branch carries weight or constraints");
  }
  return tr;
}

// ---------------------------------------------------------------------------
// Margins

std::vector<double> collision_margin(
  std::span<const VehicleState> av_leg, std::span<const VehicleState> hv_leg,
  const ScenarioGeometry & geometry, double d_safe, const PolicyKind & hv_policy)
{
  if (av_leg.size() != hv_leg.size()) {
    throw std::invalid_argument("collision_margin: legs are not time-aligned");
  }
  std::vector<double> margin(av_leg.size(), kInf);
  const double lo = geometry.s_conflict;
  const double hi = geometry.s_conflict + geometry.conflict_length;
  for (std::size_t k = 0; k < av_leg.size(); ++k) {
    const double sa = av_leg[k].s;
    const double sh = hv_leg[k].s;
    switch (geometry.kind) {
      case ScenarioKind::Merging:
        if (sa >= lo && sh >= lo) {
          margin[k] = std::abs(sa - sh) - d_safe;
        }
        break;
      case ScenarioKind::Intersection:
        if (sa >= lo && sa <= hi && sh >= lo && sh <= hi) {
          margin[k] = -d_safe;
        }
        break;
      case ScenarioKind::TrafficLight:
        if (const auto * stop = std::get_if<Stop>(&hv_policy)) {
          margin[k] = stop->stop_line_s - sa;
        }
        break;
    }
  }
  return margin;
}

// ---------------------------------------------------------------------------
// BranchProblem

BranchProblem::BranchProblem(Transcription transcription)
: tr_(std::move(transcription))
{
  const auto h = static_cast<std::size_t>(tr_.horizon);
  legs_.resize(tr_.num_legs());
  for (auto & b : legs_) {
    b.av.resize(h + 1);
    b.hv.resize(h + 1);
    b.u.resize(h);
    b.uh.resize(h);
    b.jac_av.resize(h);
    b.jac_hv.resize(h);
    b.jac_pol.resize(h);
    b.g_as.resize(h + 1);
    b.g_av.resize(h + 1);
    b.g_hs.resize(h + 1);
    b.g_hv.resize(h + 1);
    b.g_u.resize(h);
  }
}

void BranchProblem::forward(std::span<const double> z, int leg, LegBuffers & b) const
{
  const auto & after = tr_.tree.children[leg].policy;
  b.av[0] = tr_.av_init;
  b.hv[0] = tr_.hv_init;
  for (int k = 0; k < tr_.horizon; ++k) {
    const double u = z[tr_.index(leg, k)];
    const PolicyKind & policy = k < tr_.t_br ? tr_.hv_before : after;
    const double uh = policy_accel(policy, b.hv[k], b.av[k], tr_.geometry, &b.jac_pol[k]).u;
    b.u[k] = u;
    b.uh[k] = uh;
    b.av[k + 1] = step_unchecked(b.av[k], u, tr_.dt, &b.jac_av[k]);
    b.hv[k + 1] = step_unchecked(b.hv[k], uh, tr_.dt, &b.jac_hv[k]);
  }
}

double BranchProblem::leg_stage_cost(const LegBuffers & b, int k) const
{
  const auto & w = tr_.weights;
  const double u = b.u[k];
  const double u_last = k == 0 ? tr_.u_prev : b.u[k - 1];
  const double dv = b.av[k + 1].v - w.v_ref_av;
  const double du = u - u_last;
  return w.w_v * dv * dv + w.w_u * u * u + w.w_j * du * du -
         w.w_p * (b.av[k + 1].s - b.av[k].s);
}

void BranchProblem::add_stage_gradient(LegBuffers & b, int k, double weight) const
{
  const auto & w = tr_.weights;
  const double u = b.u[k];
  const double u_last = k == 0 ? tr_.u_prev : b.u[k - 1];
  const double du = u - u_last;
  b.g_av[k + 1] += weight * 2.0 * w.w_v * (b.av[k + 1].v - w.v_ref_av);
  b.g_u[k] += weight * (2.0 * w.w_u * u + 2.0 * w.w_j * du);
  if (k > 0) {
    b.g_u[k - 1] -= weight * 2.0 * w.w_j * du;
  }
  b.g_as[k + 1] -= weight * w.w_p;
  b.g_as[k] += weight * w.w_p;
}

double BranchProblem::leg_penalty(const LegBuffers & b, int leg, int k) const
{
  const auto & c = tr_.constraints;
  const auto & policy = tr_.tree.children[leg].policy;
  const auto & av = b.av[k + 1];
  const auto & hv = b.hv[k + 1];
  double p = safety_penalty(av, hv, tr_.geometry, policy, c.d_safe, tr_.weights.collision_buffer)
               .value;
  if (k >= tr_.t_br && depends_on_av(policy)) {
    const double brake = relu((b.hv[k].v - hv.v) / tr_.dt - c.b_max);
    p += brake * brake;
  }
  const double over = relu(av.v - c.v_max);
  return p + over * over;
}

void BranchProblem::add_penalty_gradient(LegBuffers & b, int leg, int k, double weight) const
{
  const auto & c = tr_.constraints;
  const auto & policy = tr_.tree.children[leg].policy;
  const auto & av = b.av[k + 1];
  const auto & hv = b.hv[k + 1];
  const auto t =
    safety_penalty(av, hv, tr_.geometry, policy, c.d_safe, tr_.weights.collision_buffer);
  b.g_as[k + 1] += weight * t.d_av_s;
  b.g_hs[k + 1] += weight * t.d_hv_s;
  if (k >= tr_.t_br && depends_on_av(policy)) {
    const double brake = relu((b.hv[k].v - hv.v) / tr_.dt - c.b_max);
    if (brake > 0.0) {
      b.g_hv[k] += weight * 2.0 * brake / tr_.dt;
      b.g_hv[k + 1] -= weight * 2.0 * brake / tr_.dt;
    }
  }
  const double over = relu(av.v - c.v_max);
  b.g_av[k + 1] += weight * 2.0 * over;
}

void BranchProblem::backward(LegBuffers & b, int leg, std::span<double> grad) const
{
  const int h = tr_.horizon;
  double la_s = b.g_as[h];
  double la_v = b.g_av[h];
  double lh_s = b.g_hs[h];
  double lh_v = b.g_hv[h];
  for (int k = h - 1; k >= 0; --k) {
    const auto & ja = b.jac_av[k];
    const auto & jh = b.jac_hv[k];
    const auto & jp = b.jac_pol[k];
    grad[tr_.index(leg, k)] += b.g_u[k] + la_s * ja.ds_du + la_v * ja.dv_du;
    const double mu_h = lh_s * jh.ds_du + lh_v * jh.dv_du;
    const double na_s = b.g_as[k] + la_s + mu_h * jp.av_s;
    const double na_v = b.g_av[k] + la_s * ja.ds_dv + la_v * ja.dv_dv + mu_h * jp.av_v;
    const double nh_s = b.g_hs[k] + lh_s + mu_h * jp.hv_s;
    const double nh_v = b.g_hv[k] + lh_s * jh.ds_dv + lh_v * jh.dv_dv + mu_h * jp.hv_v;
    la_s = na_s;
    la_v = na_v;
    lh_s = nh_s;
    lh_v = nh_v;
  }
}

double BranchProblem::evaluate(
  std::span<const double> z, std::span<double> grad, double penalty_weight) const
{
  if (static_cast<int>(z.size()) != tr_.dimension()) {
    throw std::invalid_argument("BranchProblem: decision vector has wrong dimension");
  }
  const bool want_grad = !grad.empty();
  if (want_grad) {
    std::fill(grad.begin(), grad.end(), 0.0);
  }
  const int h = tr_.horizon;
  const int legs = tr_.num_legs();

  // Per-leg cost weights over the horizon.
  int carrier = -1;
  int worst = -1;
  double worst_cost = -kInf;
  for (int j = 0; j < legs; ++j) {
    if (!tr_.active(j)) continue;
    forward(z, j, legs_[j]);
    if (carrier < 0) carrier = j;
    if (tr_.objective == ObjectiveKind::MinMax) {
      double c = 0.0;
      for (int k = 0; k < h; ++k) c += leg_stage_cost(legs_[j], k);
      if (c > worst_cost) {
        worst_cost = c;
        worst = j;
      }
    }
  }

  double total = 0.0;
  for (int j = 0; j < legs; ++j) {
    if (!tr_.active(j)) continue;
    auto & b = legs_[j];
    if (want_grad) {
      std::fill(b.g_as.begin(), b.g_as.end(), 0.0);
      std::fill(b.g_av.begin(), b.g_av.end(), 0.0);
      std::fill(b.g_hs.begin(), b.g_hs.end(), 0.0);
      std::fill(b.g_hv.begin(), b.g_hv.end(), 0.0);
      std::fill(b.g_u.begin(), b.g_u.end(), 0.0);
    }
    for (int k = 0; k < h; ++k) {
      double w = 0.0;
      if (tr_.objective == ObjectiveKind::MinMax) {
        w = j == worst ? 1.0 : 0.0;
      } else if (k < tr_.t_br) {
        w = j == carrier ? tr_.root_weight : 0.0;
      } else {
        w = tr_.leg_weights[j];
      }
      if (w > 0.0) {
        total += w * leg_stage_cost(b, k);
        if (want_grad) add_stage_gradient(b, k, w);
      }
      if (tr_.enforced[j]) {
        total += penalty_weight * leg_penalty(b, j, k);
        if (want_grad) add_penalty_gradient(b, j, k, penalty_weight);
      }
    }
    if (!std::isfinite(total)) {
      std::ostringstream msg;
      msg << "BranchProblem: non-finite cost on branch '" << tr_.tree.children[j].name << "'";
      for (int k = 0; k <= h; ++k) {
        if (!std::isfinite(b.av[k].s) || !std::isfinite(b.av[k].v) ||
          !std::isfinite(b.hv[k].s) || !std::isfinite(b.hv[k].v))
        {
          msg << " at step " << k;
          break;
        }
      }
      throw std::runtime_error(msg.str());
    }
    if (want_grad) backward(b, j, grad);
  }
  return total;
}

CostBreakdown BranchProblem::breakdown(std::span<const double> z) const
{
  CostBreakdown out;
  out.leg_costs.assign(tr_.num_legs(), 0.0);
  const int h = tr_.horizon;
  int carrier = -1;
  for (int j = 0; j < tr_.num_legs(); ++j) {
    auto & b = legs_[j];
    forward(z, j, b);
    for (int k = 0; k < h; ++k) {
      out.leg_costs[j] += leg_stage_cost(b, k);
    }
    if (!tr_.active(j)) continue;
    if (carrier < 0) carrier = j;
    for (int k = 0; k < h; ++k) {
      if (tr_.enforced[j]) out.penalty += leg_penalty(b, j, k);
      if (tr_.objective == ObjectiveKind::Expected) {
        const double w =
          k < tr_.t_br ? (j == carrier ? tr_.root_weight : 0.0) : tr_.leg_weights[j];
        out.cost += w * leg_stage_cost(b, k);
      }
    }
  }
  if (tr_.objective == ObjectiveKind::MinMax) {
    out.cost = -kInf;
    for (int j = 0; j < tr_.num_legs(); ++j) {
      if (tr_.active(j)) out.cost = std::max(out.cost, out.leg_costs[j]);
    }
  }
  return out;
}

LegTrajectory BranchProblem::simulate(std::span<const double> z, int leg) const
{
  auto & b = legs_.at(leg);
  forward(z, leg, b);
  return {b.u, b.uh, b.av, b.hv};
}

bool BranchProblem::feasible(std::span<const double> z) const
{
  const auto & c = tr_.constraints;
  for (int j = 0; j < tr_.num_legs(); ++j) {
    if (!tr_.enforced[j]) continue;
    auto & b = legs_[j];
    forward(z, j, b);
    const auto & policy = tr_.tree.children[j].policy;
    const auto margin = collision_margin(b.av, b.hv, tr_.geometry, c.d_safe, policy);
    for (std::size_t k = 1; k < margin.size(); ++k) {
      if (margin[k] < 0.0) return false;
    }
    if (depends_on_av(policy)) {
      for (int k = std::max(1, tr_.t_br); k < tr_.horizon; ++k) {
        if ((b.hv[k].v - b.hv[k + 1].v) / tr_.dt > c.b_max + kBrakingSlack) return false;
      }
    }
  }
  return true;
}

double evaluate_cost(
  const Transcription & transcription, std::span<const double> z, std::span<double> grad,
  double penalty_weight)
{
  return BranchProblem(transcription).evaluate(z, grad, penalty_weight);
}

// ---------------------------------------------------------------------------
// Plans

const PlanLeg & BranchPlan::leg(int branch_id) const
{
  for (const auto & l : legs) {
    if (l.branch_id == branch_id) return l;
  }
  throw std::invalid_argument("BranchPlan: unknown branch id " + std::to_string(branch_id));
}

WarmStart WarmStart::shifted(const BranchPlan & plan)
{
  WarmStart ws;
  for (const auto & leg : plan.legs) {
    if (leg.u_av.empty()) continue;
    std::vector<double> u(leg.u_av.begin() + 1, leg.u_av.end());
    u.push_back(leg.u_av.back());
    ws.branch_ids.push_back(leg.branch_id);
    ws.inputs.push_back(std::move(u));
  }
  return ws;
}

namespace
{

std::vector<double> seed_from_warm_start(const Transcription & tr, const WarmStart & ws)
{
  std::vector<double> z(tr.dimension(), 0.0);
  if (ws.inputs.empty()) return z;
  // Heavier legs are written last so they own the shared part.
  std::vector<int> order(tr.num_legs());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return tr.leg_weights[a] < tr.leg_weights[b];
  });
  for (int j : order) {
    const int id = tr.tree.children[j].id;
    std::size_t src = 0;
    for (std::size_t i = 0; i < ws.branch_ids.size(); ++i) {
      if (ws.branch_ids[i] == id) {
        src = i;
        break;
      }
    }
    const auto & u = ws.inputs[src];
    if (u.empty()) continue;
    for (int k = 0; k < tr.horizon; ++k) {
      z[tr.index(j, k)] = u[std::min<std::size_t>(k, u.size() - 1)];
    }
  }
  return z;
}

BranchPlan assemble_plan(
  const BranchProblem & problem, std::span<const double> z, SolverDiagnostics diagnostics)
{
  const auto & tr = problem.transcription();
  BranchPlan plan;
  plan.t_br = tr.t_br;
  plan.dt_obs_steps = tr.tree.dt_obs_steps;
  plan.shared_steps = tr.shared_steps;
  plan.decision.assign(z.begin(), z.end());
  for (int j = 0; j < tr.num_legs(); ++j) {
    const auto traj = problem.simulate(z, j);
    PlanLeg leg;
    leg.branch_id = tr.tree.children[j].id;
    leg.name = tr.tree.children[j].name;
    leg.probability = tr.tree.children[j].probability;
    leg.weight = tr.leg_weights[j];
    leg.enforced = tr.enforced[j];
    leg.u_av = traj.u_av;
    leg.u_hv = traj.u_hv;
    leg.av = traj.av;
    leg.hv = traj.hv;
    plan.legs.push_back(std::move(leg));
  }
  const auto bd = problem.breakdown(z);
  diagnostics.cost = bd.cost;
  diagnostics.penalty_residual = bd.penalty;
  diagnostics.warnings.insert(
    diagnostics.warnings.begin(), tr.warnings.begin(), tr.warnings.end());
  plan.diagnostics = std::move(diagnostics);
  return plan;
}

}  // namespace

BranchPlan fallback_plan(const Transcription & transcription)
{
  const BranchProblem problem(transcription);
  const double u = std::max(-transcription.constraints.fallback_decel,
                            transcription.constraints.u_min);
  std::vector<double> z(transcription.dimension(), u);
  SolverDiagnostics d;
  d.fallback = true;
  d.feasible = problem.feasible(z);
  d.warnings.push_back("no feasible plan found; braking fallback");
  return assemble_plan(problem, z, d);
}

BranchPlan solve(
  const Transcription & transcription, const SolverSettings & settings,
  const WarmStart * warm_start)
{
  const BranchProblem problem(transcription);
  const auto & tr = problem.transcription();
  const auto lower = tr.lower_bounds();
  const auto upper = tr.upper_bounds();

  std::vector<std::vector<double>> candidates;
  candidates.push_back(
    warm_start ? seed_from_warm_start(tr, *warm_start) : std::vector<double>(tr.dimension(), 0.0));
  if (settings.restarts && tr.geometry.kind != ScenarioKind::TrafficLight) {
    candidates.emplace_back(tr.dimension(), tr.constraints.u_max);
    candidates.emplace_back(tr.dimension(), tr.constraints.u_min);
    if (warm_start) candidates.emplace_back(tr.dimension(), 0.0);
  }

  BoxLbfgsSettings lbfgs;
  lbfgs.max_iterations = settings.max_iterations;
  lbfgs.gradient_tolerance = settings.tolerance;

  SolverDiagnostics best_diag;
  std::vector<double> best;
  double best_cost = kInf;
  int total_iterations = 0;

  for (auto & z : candidates) {
    double mu = tr.weights.collision_weight;
    for (int c = 0; c <= settings.max_continuations; ++c) {
      const auto objective = [&](std::span<const double> x, std::span<double> g) {
        return problem.evaluate(x, g, mu);
      };
      const auto res = minimize_box(objective, lower, upper, z, lbfgs);
      total_iterations += res.iterations;
      if (problem.feasible(z)) {
        const double cost = problem.breakdown(z).cost;
        if (cost < best_cost) {
          best_cost = cost;
          best = z;
          best_diag.converged = res.converged;
          best_diag.continuations = c;
          best_diag.penalty_weight = mu;
        }
        break;
      }
      mu *= 2.0;
    }
  }

  if (best.empty()) {
    auto plan = fallback_plan(transcription);
    plan.diagnostics.iterations = total_iterations;
    plan.diagnostics.candidates = static_cast<int>(candidates.size());
    return plan;
  }
  best_diag.feasible = true;
  best_diag.iterations = total_iterations;
  best_diag.candidates = static_cast<int>(candidates.size());
  return assemble_plan(problem, best, best_diag);
}

ControlInput extract_control(const BranchPlan & plan, const ScenarioTree & tree, int t_now)
{
  if (plan.legs.empty() || plan.legs.front().u_av.empty()) {
    throw std::invalid_argument("extract_control: empty plan");
  }
  const auto k = static_cast<std::size_t>(t_now);
  if (k >= plan.legs.front().u_av.size()) {
    throw std::out_of_range("extract_control: t_now beyond the plan horizon");
  }
  if (t_now < plan.t_br) {
    return {plan.legs.front().u_av[k]};
  }
  std::size_t active = 0;
  if (tree.truth) {
    active = tree.child_index(*tree.truth);
  } else {
    for (std::size_t j = 1; j < tree.children.size(); ++j) {
      const auto & c = tree.children[j];
      const auto & a = tree.children[active];
      if (c.probability > a.probability || (c.probability == a.probability && c.id < a.id)) {
        active = j;
      }
    }
  }
  return {plan.legs.at(active).u_av[k]};
}

std::vector<VehicleState> common_prefix(const BranchPlan & plan)
{
  const auto & av = plan.legs.front().av;
  const auto n = std::min<std::size_t>(av.size(), plan.t_br + plan.shared_steps + 1);
  return {av.begin(), av.begin() + static_cast<std::ptrdiff_t>(n)};
}

FixedPointResult probability_fixed_point(
  const ScenarioTree & tree, const ScenarioConfig & config, const VehicleState & hv_init,
  const VehicleState & av_init, double u_prev, const WarmStart * warm_start,
  const TranscriptionOptions & options)
{
  FixedPointResult out;
  out.tree = tree;
  const bool coupled =
    config.decision.mode == DecisionMode::CrossingFrequency && !tree.truth.has_value();
  if (!coupled) {
    out.plan = solve(transcribe(tree, config, hv_init, av_init, u_prev, options), config.solver,
                     warm_start);
    out.probabilities = tree.child_probabilities();
    out.rounds = 1;
    out.plan.diagnostics.probability_rounds = 1;
    return out;
  }

  WarmStart ws = warm_start ? *warm_start : WarmStart{};
  out.converged = false;
  for (int round = 0; round < config.solver.max_probability_rounds; ++round) {
    out.plan = solve(
      transcribe(out.tree, config, hv_init, av_init, u_prev, options), config.solver,
      ws.inputs.empty() ? nullptr : &ws);
    out.probabilities = out.tree.child_probabilities();
    out.rounds = round + 1;
    const auto prefix = common_prefix(out.plan);
    const auto & hv = out.plan.legs.front().hv;
    const auto updated = branch_probabilities(
      out.tree, prefix, hv, config.decision, config.geometry.s_conflict, config.dt);
    out.history.push_back(updated);
    double change = 0.0;
    for (std::size_t j = 0; j < updated.size(); ++j) {
      change = std::max(change, std::abs(updated[j] - out.probabilities[j]));
    }
    if (change < config.solver.probability_tolerance) {
      out.converged = true;
      break;
    }
    out.tree.set_child_probabilities(updated);
    ws = WarmStart{};
    for (const auto & leg : out.plan.legs) {
      ws.branch_ids.push_back(leg.branch_id);
      ws.inputs.push_back(leg.u_av);
    }
  }
  out.plan.diagnostics.probability_rounds = out.rounds;
  out.plan.diagnostics.probabilities_converged = out.converged;
  return out;
}

}  // namespace branch_mpc
