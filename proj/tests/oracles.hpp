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

#ifndef ORACLES_HPP_
#define ORACLES_HPP_

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "branch_mpc/planner.hpp"
#include "test_support.hpp"

namespace branch_mpc::test
{

/// Many small sub-steps. Within a sub-step the velocity is linear, so the
/// trapezoid rule integrates position exactly; a stop inside a sub-step is
/// resolved by bisection on the sub-step duration.
inline VehicleState substep_oracle(VehicleState x, double u, double dt, int substeps)
{
  long double s = x.s;
  long double v = x.v;
  const long double h = static_cast<long double>(dt) / substeps;
  for (int i = 0; i < substeps; ++i) {
    const long double v_next = v + u * h;
    if (v_next >= 0.0L) {
      s += 0.5L * (v + v_next) * h;
      v = v_next;
      continue;
    }
    long double lo = 0.0L;
    long double hi = h;
    for (int it = 0; it < 200; ++it) {
      const long double mid = 0.5L * (lo + hi);
      (v + u * mid > 0.0L ? lo : hi) = mid;
    }
    s += 0.5L * v * lo;
    v = 0.0L;
  }
  return {static_cast<double>(s), static_cast<double>(v)};
}

/// Largest deviation [m, m/s] of a random 50-step rollout from the sub-step oracle.
inline double rollout_oracle_error(std::mt19937_64 & rng)
{
  std::uniform_real_distribution<double> u_dist(-4.0, 3.0);
  std::uniform_real_distribution<double> v_dist(0.0, 15.0);
  std::vector<ControlInput> inputs(50);
  for (auto & in : inputs) in.u = u_dist(rng);
  const VehicleState x0{0.0, v_dist(rng)};
  const auto traj = rollout(x0, inputs, 0.2);
  VehicleState o = x0;
  double err = 0.0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    o = substep_oracle(o, inputs[k].u, 0.2, 100);
    err = std::max({err, std::abs(traj[k + 1].s - o.s), std::abs(traj[k + 1].v - o.v)});
  }
  return err;
}

/// Standard single-trajectory MPC for an AV that never stops and never meets
/// a safety term: a quadratic program solved in closed form.
struct QpOracle
{
  double dt;
  CostWeights w;
  double u_prev;
  VehicleState x0;

  double cost(const Eigen::VectorXd & u) const
  {
    double s = x0.s;
    double v = x0.v;
    double prev = u_prev;
    double total = 0.0;
    for (Eigen::Index k = 0; k < u.size(); ++k) {
      const double s_next = s + v * dt + 0.5 * u[k] * dt * dt;
      const double v_next = v + u[k] * dt;
      total += w.w_v * (v_next - w.v_ref_av) * (v_next - w.v_ref_av) + w.w_u * u[k] * u[k] +
        w.w_j * (u[k] - prev) * (u[k] - prev) - w.w_p * (s_next - s);
      s = s_next;
      v = v_next;
      prev = u[k];
    }
    return total;
  }

  // The cost is quadratic; read its Hessian and gradient off exact evaluations.
  Eigen::VectorXd minimize(int n) const
  {
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(n);
    const double f0 = cost(zero);
    Eigen::VectorXd fe(n);
    for (int i = 0; i < n; ++i) fe[i] = cost(Eigen::VectorXd::Unit(n, i));
    Eigen::MatrixXd H(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        H(i, j) = cost(Eigen::VectorXd::Unit(n, i) + Eigen::VectorXd::Unit(n, j)) - fe[i] - fe[j] + f0;
      }
    }
    Eigen::VectorXd g(n);
    for (int i = 0; i < n; ++i) g[i] = fe[i] - f0 - 0.5 * H(i, i);
    return H.ldlt().solve(-g);
  }
};

/// Cost gap between the planner's J = 1 solution and the QP optimum.
inline double single_branch_oracle_gap(const ScenarioConfig & config, double u_prev)
{
  const auto tree =
    build_tree(config, {config.dt, config.horizon_steps(), 0}, config.hv_init, config.av_init);
  const auto tr = transcribe(tree, config, config.hv_init, config.av_init, u_prev);
  const auto plan = solve(tr, config.solver);
  const QpOracle oracle{config.dt, config.weights, u_prev, config.av_init};
  const auto u_star = oracle.minimize(tr.dimension());
  return std::abs(BranchProblem(tr).breakdown(plan.decision).cost - oracle.cost(u_star));
}

/// Random decision vector and penalty weight around the conflict region of a
/// bundled scenario.
struct GradientInstance
{
  Transcription tr;
  std::vector<double> z;
  double mu{0.0};
};

inline GradientInstance random_gradient_instance(std::mt19937_64 & rng, int index)
{
  static const char * names[] = {
    "merging.json", "junction.json", "intersection.json", "traffic_light.json"};
  auto config = bundled(names[index % 4]);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  config.horizon = 3.0;
  const double sc = config.geometry.s_conflict;
  const VehicleState av{sc - 40.0 + 35.0 * unit(rng), 2.0 + 12.0 * unit(rng)};
  const VehicleState hv{sc - 40.0 + 35.0 * unit(rng), 2.0 + 12.0 * unit(rng)};
  auto tree = build_tree(config, {config.dt, config.horizon_steps(), 0}, hv, av);
  std::vector<double> p(tree.num_children());
  double sum = 0.0;
  for (auto & x : p) sum += (x = 0.1 + unit(rng));
  for (auto & x : p) x /= sum;
  p.back() = 1.0;
  for (std::size_t j = 0; j + 1 < p.size(); ++j) p.back() -= p[j];
  tree.set_child_probabilities(p);
  GradientInstance inst{transcribe(tree, config, hv, av, -1.0 + 2.0 * unit(rng)), {}, 0.0};
  const auto lo = inst.tr.lower_bounds();
  const auto hi = inst.tr.upper_bounds();
  for (std::size_t i = 0; i < lo.size(); ++i) inst.z.push_back(lo[i] + (hi[i] - lo[i]) * unit(rng));
  inst.mu = std::pow(10.0, 3.0 * unit(rng));
  return inst;
}

/// max_i |g_i - fd_i| / max(1, max_i |g_i|) with central differences of step h.
inline double gradient_error(const GradientInstance & inst, double h = 1e-5)
{
  BranchProblem problem(inst.tr);
  std::vector<double> grad(inst.z.size());
  problem.evaluate(inst.z, grad, inst.mu);
  double err = 0.0;
  double scale = 1.0;
  for (std::size_t i = 0; i < inst.z.size(); ++i) {
    auto zp = inst.z;
    auto zm = inst.z;
    zp[i] += h;
    zm[i] -= h;
    const double fd =
      (problem.evaluate(zp, {}, inst.mu) - problem.evaluate(zm, {}, inst.mu)) / (2 * h);
    err = std::max(err, std::abs(fd - grad[i]));
    scale = std::max(scale, std::abs(grad[i]));
  }
  return err / scale;
}

}  // namespace branch_mpc::test

#endif  // ORACLES_HPP_
