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

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "branch_mpc/baselines.hpp"
#include "branch_mpc/decision.hpp"
#include "branch_mpc/io.hpp"
#include "branch_mpc/sim.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

namespace
{

using namespace branch_mpc;
using Clock = std::chrono::steady_clock;

// Tolerances.
constexpr double kSweepEpsilon = 0.01;        // fraction of the robust mean
constexpr int kSweepTrials = 200;
constexpr std::uint64_t kSweepSeed = 7;
constexpr double kSweepBudget = 600.0;        // [s]
constexpr double kCycleBudget = 5.0;          // [s]
constexpr double kIntersectionBudget = 10.0;  // [s]
constexpr double kNormalization = 1e-12;
constexpr double kDynamics = 1e-9;            // [m]
constexpr double kGradient = 1e-4;
constexpr double kOracleCost = 1e-6;

struct Report
{
  int failures{0};

  void line(int id, bool pass, const std::string & title, const std::string & detail)
  {
    std::printf("%s criterion %d: %s (%s)\n", pass ? "PASS" : "FAIL", id, title.c_str(), detail.c_str());
    std::fflush(stdout);
    failures += pass ? 0 : 1;
  }
};

double seconds_since(Clock::time_point start)
{
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double x, int precision = 3)
{
  std::ostringstream os;
  os.precision(precision);
  os << std::fixed << x;
  return os.str();
}

ScenarioTree initial_tree(const ScenarioConfig & c)
{
  return build_tree(c, {c.dt, c.horizon_steps(), 0}, c.hv_init, c.av_init);
}

// ---------------------------------------------------------------------------
// Criteria 1-3: traffic-light sweep.

struct SweepChecks
{
  bool ordering{true};
  bool crossover{true};
  bool robust{true};
  int collisions{0};
  std::string ordering_detail;
  std::string crossover_detail;
  std::string robust_detail;
};

SweepChecks traffic_light_sweep(double & elapsed)
{
  SweepConfig sweep;
  sweep.scenario = test::bundled("traffic_light.json");
  for (int i = 0; i <= 10; ++i) sweep.grid.push_back(i / 10.0);
  sweep.trials = kSweepTrials;
  sweep.seed = kSweepSeed;
  const auto start = Clock::now();
  const auto result = run_sweep(sweep);
  elapsed = seconds_since(start);

  SweepChecks out;
  double worst_ordering = -std::numeric_limits<double>::infinity();
  double worst_low = -std::numeric_limits<double>::infinity();
  double worst_high = std::numeric_limits<double>::infinity();
  double worst_robust = -std::numeric_limits<double>::infinity();
  for (double p : sweep.grid) {
    const double b = result.cell(p, PlannerKind::Branch).mean_cost;
    const double r = result.cell(p, PlannerKind::Robust).mean_cost;
    const double s = result.cell(p, PlannerKind::Prescient).mean_cost;
    const double c = result.cell(p, PlannerKind::Contingency).mean_cost;
    const double eps = kSweepEpsilon * std::abs(r);
    // Slack left in each inequality, as a fraction of epsilon.
    const double slack_ps = (s - b) / eps;
    const double slack_br = (b - r) / eps;
    worst_ordering = std::max({worst_ordering, slack_ps, slack_br});
    worst_robust = std::max(worst_robust, slack_br);
    if (s > b + eps || b > r + eps) {
      out.ordering = false;
      out.ordering_detail += " violated at p=" + fmt(p, 1);
    }
    if (b > r + eps) out.robust = false;
    if (p <= 0.2 + 1e-9) {
      worst_low = std::max(worst_low, (c - b) / eps);
      if (c - b > eps) {
        out.crossover = false;
        out.crossover_detail += " C-B>eps at p=" + fmt(p, 1);
      }
    }
    if (p >= 0.7 - 1e-9) {
      worst_high = std::min(worst_high, c - b);
      if (!(c > b)) {
        out.crossover = false;
        out.crossover_detail += " C<=B at p=" + fmt(p, 1);
      }
    }
    for (auto k : sweep.planners) out.collisions += result.cell(p, k).collisions;
    std::printf(
      "  p_red=%.1f  branch=%.2f  robust=%.2f  prescient=%.2f  contingency=%.2f\n", p, b, r, s, c);
  }
  out.ordering_detail = "11 cells x " + std::to_string(kSweepTrials) + " trials, max(lhs-rhs)/eps=" +
    fmt(worst_ordering) + ", " + fmt(elapsed, 1) + " s" + out.ordering_detail;
  out.crossover_detail = "max (C-B)/eps at p<=0.2: " + fmt(worst_low) +
    ", min C-B at p>=0.7: " + fmt(worst_high, 2) + out.crossover_detail;
  out.robust_detail = std::to_string(out.collisions) + " collisions over " +
    std::to_string(11 * 4 * kSweepTrials) + " trials, max (B-R)/eps=" + fmt(worst_robust);
  return out;
}

// ---------------------------------------------------------------------------
// Criterion 4: merging multi-modality.

void merging_check(Report & report)
{
  const auto start = Clock::now();
  const auto config = test::bundled("merging.json");
  const auto tree = initial_tree(config);
  const double sc = config.geometry.s_conflict;
  const auto branch = branch_plan(tree, config, config.hv_init, config.av_init, 0.0).plan;
  const auto robust = robust_plan(tree, config, config.hv_init, config.av_init, 0.0);
  bool pass = !branch.diagnostics.fallback && !robust.diagnostics.fallback;
  std::string detail;
  for (const auto & leg : branch.legs) {
    const double av = test::crossing_time(leg.av, sc, config.dt);
    const double hv = test::crossing_time(leg.hv, sc, config.dt);
    const bool ahead = av >= 0.0 && hv >= 0.0 && av < hv;
    const bool behind = av >= 0.0 && hv >= 0.0 && av > hv;
    pass = pass && (leg.name == "slow" ? ahead : behind);
    detail += "branch " + leg.name + " AV " + fmt(av, 1) + " s vs HV " + fmt(hv, 1) + " s; ";
  }
  for (const auto & leg : robust.legs) {
    const double av = test::crossing_time(leg.av, sc, config.dt);
    const double hv = test::crossing_time(leg.hv, sc, config.dt);
    pass = pass && av >= 0.0 && hv >= 0.0 && av > hv;
    detail += "robust " + leg.name + " " + fmt(av, 1) + " vs " + fmt(hv, 1) + "; ";
  }
  const double elapsed = seconds_since(start);
  pass = pass && elapsed < kCycleBudget;
  report.line(4, pass, "merging plan squeezes in ahead of the slow mode only; robust goes behind all",
              detail + fmt(elapsed, 2) + " s");
}

// ---------------------------------------------------------------------------
// Criterion 5: interaction-aware junction.

void junction_check(Report & report)
{
  const auto start = Clock::now();
  const auto aware = test::bundled("junction.json");
  auto blind = aware;
  for (auto & p : blind.hv_after) p.policy = ConstantSpeed{};
  const double sc = aware.geometry.s_conflict;

  const auto crossing = [&](const ScenarioConfig & c, double & av, double & hv, double & brake) {
    const auto plan = branch_plan(initial_tree(c), c, c.hv_init, c.av_init, 0.0).plan;
    const auto & leg = plan.legs.front();
    av = test::crossing_time(leg.av, sc, c.dt);
    hv = test::crossing_time(leg.hv, sc, c.dt);
    brake = predicted_hv_braking(leg.hv, c.dt);
    return !plan.diagnostics.fallback;
  };
  double av_b = 0, hv_b = 0, brake_b = 0, av_a = 0, hv_a = 0, brake_a = 0;
  bool pass = crossing(blind, av_b, hv_b, brake_b) && crossing(aware, av_a, hv_a, brake_a);
  pass = pass && av_b >= 0.0 && hv_b >= 0.0 && av_b > hv_b;
  pass = pass && av_a >= 0.0 && hv_a >= 0.0 && av_a < hv_a;
  pass = pass && brake_a <= aware.constraints.b_max;
  const double elapsed = seconds_since(start);
  pass = pass && elapsed < kCycleBudget;
  report.line(
    5, pass, "interaction-aware model lets the AV go first within the HV braking limit",
    "non-interacting AV " + fmt(av_b, 1) + " s vs HV " + fmt(hv_b, 1) + " s; interaction-aware AV " +
      fmt(av_a, 1) + " s vs HV " + fmt(hv_a, 1) + " s, HV decel " + fmt(brake_a, 2) + " <= " +
      fmt(aware.constraints.b_max, 2) + " m/s^2; " + fmt(elapsed, 2) + " s");
}

// ---------------------------------------------------------------------------
// Criterion 6: intersection with plan-dependent probabilities.

void intersection_check(Report & report)
{
  const auto start = Clock::now();
  auto fixed = test::bundled("intersection.json");
  fixed.decision.mode = DecisionMode::FixedProbabilities;
  fixed.decision.fixed_probabilities = {0.5, 0.5};
  auto adapt = fixed;
  adapt.decision.mode = DecisionMode::CrossingFrequency;
  const int stop = adapt.decision.stop_branch;
  const double v_ref = fixed.weights.v_ref_av;
  const double sc = fixed.geometry.s_conflict;

  const auto fixed_result = branch_plan(initial_tree(fixed), fixed, fixed.hv_init, fixed.av_init, 0.0);
  const auto & fp = fixed_result.plan;
  double root_min = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= fp.t_br; ++k) root_min = std::min(root_min, fp.legs.front().av[k].v);
  const bool dip = !fp.diagnostics.fallback && fp.t_br > 0 && root_min < v_ref;

  const auto adapt_result = branch_plan(initial_tree(adapt), adapt, adapt.hv_init, adapt.av_init, 0.0);
  const auto & ap = adapt_result.plan;
  const double p_stop = adapt_result.probabilities.at(stop);
  const double fixed_stop = fixed_result.probabilities.at(stop);
  // Speeds up again after the branching step, before reaching the conflict.
  const auto & leg = ap.leg(adapt_result.tree.children.at(stop).id);
  double rise = 0.0;
  for (std::size_t k = static_cast<std::size_t>(ap.t_br); k + 1 < leg.av.size(); ++k) {
    if (leg.av[k].s >= sc) break;
    rise = std::max(rise, leg.av[k + 1].v - leg.av[k].v);
  }
  const bool pass = dip && !ap.diagnostics.fallback && adapt_result.converged && p_stop > 0.5 &&
    p_stop > fixed_stop && rise > 0.0 && seconds_since(start) < kIntersectionBudget;
  report.line(
    6, pass, "fixed probabilities slow the AV; adapted probabilities favour yielding",
    "fixed root v_min " + fmt(root_min, 2) + " < " + fmt(v_ref, 1) + " m/s; adapted P_stop " +
      fmt(p_stop, 3) + " > fixed " + fmt(fixed_stop, 3) + " after " +
      std::to_string(adapt_result.rounds) + " rounds; late speed-up " + fmt(rise, 3) +
      " m/s per step; " + fmt(seconds_since(start), 2) + " s");
  std::printf(
    "SKIPPED criterion 6 P_stop = 0.856 +/- 0.02: the fitted crossing-frequency constants are not "
    "available, bundled beta/tta_mid are defaults (P_stop here %.3f)\n",
    p_stop);
}

// ---------------------------------------------------------------------------
// Criterion 7: property suites.

void property_check(Report & report)
{
  std::string detail;
  bool pass = true;
  const auto add = [&](const std::string & name, bool ok, const std::string & value) {
    pass = pass && ok;
    detail += name + (ok ? " ok " : " FAILED ") + value + "; ";
  };

  // Probability normalization over closed-loop traces and the decision model.
  double norm = 0.0;
  {
    auto cf = test::bundled("intersection.json");
    cf.decision.mode = DecisionMode::CrossingFrequency;
    for (const char * name : {"merging.json", "traffic_light.json"}) {
      const auto c = test::bundled(name);
      const auto r = run_closed_loop(make_sim_config(c, PlannerKind::Branch, 0), 3);
      for (const auto & row : r.trace) {
        double sum = 0.0;
        for (double p : row.probabilities) sum += p;
        norm = std::max(norm, std::abs(sum - 1.0));
      }
    }
    const auto tree = initial_tree(cf);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> v(0.0, 25.0);
    for (int i = 0; i < 1000; ++i) {
      std::vector<VehicleState> plan;
      const double speed = v(rng);
      for (int k = 0; k <= tree.horizon; ++k) plan.push_back({40.0 + speed * cf.dt * k, speed});
      const auto p = branch_probabilities(tree, plan, {}, cf.decision, cf.geometry.s_conflict, cf.dt);
      norm = std::max(norm, std::abs(p[0] + p[1] - 1.0));
    }
  }
  add("normalization", norm <= kNormalization, "err " + fmt(norm * 1e12, 3) + "e-12");

  // Shared observation prefix is bitwise equal across children.
  {
    const auto c = test::bundled("merging.json");
    const auto plan = branch_plan(initial_tree(c), c, c.hv_init, c.av_init, 0.0).plan;
    bool equal = plan.shared_steps == c.dt_obs_steps();
    for (const auto & leg : plan.legs) {
      for (int k = 0; k < plan.t_br + plan.shared_steps; ++k) {
        equal = equal && leg.u_av[k] == plan.legs.front().u_av[k] &&
          leg.av[k + 1] == plan.legs.front().av[k + 1];
      }
    }
    add("shared prefix", equal, std::to_string(plan.t_br) + "+" + std::to_string(plan.shared_steps) + " steps");
  }

  // Exact dynamics against the sub-step oracle.
  {
    std::mt19937_64 rng(42);
    double err = 0.0;
    for (int i = 0; i < 20; ++i) err = std::max(err, test::rollout_oracle_error(rng));
    add("dynamics", err <= kDynamics, "max err " + fmt(err * 1e12, 3) + "e-12");
  }

  // Analytic gradient against central differences.
  {
    std::mt19937_64 rng(2024);
    double err = 0.0;
    for (int i = 0; i < 100; ++i) {
      err = std::max(err, test::gradient_error(test::random_gradient_instance(rng, i)));
    }
    add("gradient", err <= kGradient, "100 instances, max rel err " + fmt(err * 1e6, 3) + "e-6");
  }

  // Single branch against standard MPC.
  {
    auto c = test::lone_av_config(1);
    double gap = 0.0;
    for (double w_p : {0.0, 0.2}) {
      c.weights.w_p = w_p;
      for (double u_prev : {0.0, 0.4, -1.0}) gap = std::max(gap, test::single_branch_oracle_gap(c, u_prev));
    }
    add("standard MPC", gap <= kOracleCost, "cost gap " + fmt(gap * 1e9, 3) + "e-9");
  }

  // Seed determinism.
  {
    const auto c = test::bundled("merging.json");
    const auto sim = make_sim_config(c, PlannerKind::Branch, 0);
    const auto a = run_closed_loop(sim, 17);
    const auto b = run_closed_loop(sim, 17);
    bool same = a.trace.size() == b.trace.size() && a.total_cost == b.total_cost && a.truth == b.truth;
    for (std::size_t k = 0; same && k < a.trace.size(); ++k) {
      same = a.trace[k].av == b.trace[k].av && a.trace[k].hv == b.trace[k].hv &&
        a.trace[k].u_av == b.trace[k].u_av && a.trace[k].probabilities == b.trace[k].probabilities;
    }
    add("determinism", same, "bitwise");
  }
  report.line(7, pass, "property suites", detail.substr(0, detail.size() - 2));
}

}  // namespace

int main()
{
  Report report;
  double elapsed = 0.0;
  const auto sweep = traffic_light_sweep(elapsed);
  report.line(
    1, sweep.ordering && elapsed < kSweepBudget,
    "traffic-light sweep: prescient <= branch + eps and branch <= robust + eps", sweep.ordering_detail);
  report.line(2, sweep.crossover, "contingency matches branch at low p_red, degrades at high p_red",
              sweep.crossover_detail);
  report.line(3, sweep.robust && sweep.collisions == 0, "no collisions; branch never worse than robust",
              sweep.robust_detail);
  merging_check(report);
  junction_check(report);
  intersection_check(report);
  property_check(report);
  std::printf("%d of 7 criteria failed\n", report.failures);
  return report.failures == 0 ? 0 : 1;
}
