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

#include "branch_mpc/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <stdexcept>
#include <thread>
#include <tuple>

namespace branch_mpc
{

namespace
{

std::uint64_t splitmix64(std::uint64_t x)
{
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Uniform double in [0, 1) from the top 53 bits, identical on every platform.
double uniform01(std::mt19937_64 & rng)
{
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double stage_cost(
  const CostWeights & w, const VehicleState & av, const VehicleState & av_next, double u,
  double u_prev)
{
  const double dv = av_next.v - w.v_ref_av;
  const double du = u - u_prev;
  return w.w_v * dv * dv + w.w_u * u * u + w.w_j * du * du - w.w_p * (av_next.s - av.s);
}

}  // namespace

void SimConfig::validate() const
{
  scenario.validate();
  if (trials < 1) throw ConfigError("trials", "must be >= 1");
  if (max_steps < 1) throw ConfigError("sim.max_steps", "must be >= 1");
  if (truth.size() != scenario.hv_after.size()) {
    throw ConfigError("sim.truth", "needs one probability per post-branching policy");
  }
  double sum = 0.0;
  for (double p : truth) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("sim.truth", "entries must lie in [0, 1]");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("sim.truth", "must sum to 1");
}

SimConfig make_sim_config(
  const ScenarioConfig & scenario, PlannerKind planner, std::uint64_t seed, int trials)
{
  SimConfig sim;
  sim.scenario = scenario;
  sim.planner = planner;
  sim.truth = scenario.sim.truth;
  if (sim.truth.empty()) {
    sim.truth.assign(scenario.hv_after.size(), 1.0 / static_cast<double>(scenario.hv_after.size()));
  }
  sim.trials = trials;
  sim.seed = seed;
  sim.max_steps = scenario.sim.max_steps;
  return sim;
}

std::string_view to_string(EventKind kind)
{
  switch (kind) {
    case EventKind::TruthDrawn:
      return "truth_drawn";
    case EventKind::Branching:
      return "branching";
    case EventKind::Detection:
      return "detection";
    case EventKind::AvConflictEntry:
      return "av_conflict_entry";
    case EventKind::HvConflictEntry:
      return "hv_conflict_entry";
    case EventKind::Collision:
      return "collision";
    case EventKind::Fallback:
      return "fallback";
  }
  return "unknown";
}

std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t index)
{
  return splitmix64(seed ^ splitmix64(index));
}

std::size_t sample_branch(std::span<const double> distribution, double u)
{
  if (distribution.empty()) throw std::invalid_argument("sample_branch: empty distribution");
  double cum = 0.0;
  std::size_t last = 0;
  for (std::size_t j = 0; j < distribution.size(); ++j) {
    if (distribution[j] <= 0.0) continue;
    last = j;
    cum += distribution[j];
    if (u < cum) return j;
  }
  return last;
}

TrialResult run_closed_loop(const SimConfig & config, std::uint64_t seed)
{
  config.validate();
  const auto & sc = config.scenario;
  const auto & geo = sc.geometry;
  const bool light = geo.kind == ScenarioKind::TrafficLight;
  const int obs = sc.dt_obs_steps();
  constexpr double kInf = std::numeric_limits<double>::infinity();

  TrialResult out;
  out.planner = config.planner;
  out.seed = seed;
  out.min_margin = kInf;

  std::mt19937_64 rng(seed);
  std::optional<int> oracle;
  if (config.planner == PlannerKind::Prescient) {
    // Peek at the draw the trial will make at s_br.
    auto peek = rng;
    oracle = static_cast<int>(sample_branch(config.truth, uniform01(peek))) + 1;
  }

  VehicleState av = sc.av_init;
  VehicleState hv = sc.hv_init;
  double u_prev = sc.sim.u_prev;
  std::optional<int> t_branch;
  std::optional<int> truth_idx;
  bool revealed = false;
  bool av_in = av.s >= geo.s_conflict;
  bool hv_in = hv.s >= geo.s_conflict;
  WarmStart warm;

  for (int k = 0; k < config.max_steps; ++k) {
    const double trigger = light ? av.s : hv.s;
    if (!t_branch && trigger >= geo.s_br) {
      t_branch = k;
      out.events.push_back({k, EventKind::Branching, light ? "av" : "hv"});
      truth_idx = static_cast<int>(sample_branch(config.truth, uniform01(rng)));
      out.truth = *truth_idx + 1;
      out.truth_name = sc.hv_after[*truth_idx].name;
      out.events.push_back({k, EventKind::TruthDrawn, out.truth_name});
    }
    if (t_branch && !revealed && k >= *t_branch + obs) {
      revealed = true;
      out.events.push_back({k, EventKind::Detection, out.truth_name});
    }

    CycleInput in;
    in.hv = hv;
    in.av = av;
    in.u_prev = u_prev;
    if (revealed) in.revealed = out.truth;
    in.oracle = oracle;
    if (t_branch && !revealed) in.obs_steps = *t_branch + obs - k;
    in.warm_start = warm.inputs.empty() ? nullptr : &warm;
    const int remaining = config.max_steps - k;
    std::optional<ScenarioConfig> shrunk;
    if (sc.sim.shrink_horizon && remaining < sc.horizon_steps()) {
      shrunk = sc;
      shrunk->horizon = remaining * sc.dt;
    }
    const auto cycle = plan_cycle(config.planner, shrunk ? *shrunk : sc, in);

    const double u = std::clamp(cycle.control.u, sc.constraints.u_min, sc.constraints.u_max);
    const PolicyKind & after = truth_idx ? sc.hv_after[*truth_idx].policy : sc.hv_before;
    const double uh = hv_input(hv, av, geo, sc.hv_before, after).u;
    const VehicleState av_next = step(av, {u}, sc.dt);
    const VehicleState hv_next = step(hv, {uh}, sc.dt);

    TraceRow row;
    row.step = k;
    row.t = k * sc.dt;
    row.av = av;
    row.hv = hv;
    row.u_av = u;
    row.u_hv = uh;
    row.stage_cost = stage_cost(sc.weights, av, av_next, u, u_prev);
    row.probabilities.assign(sc.hv_after.size(), 0.0);
    for (const auto & c : cycle.tree.children) {
      row.probabilities.at(static_cast<std::size_t>(c.id - 1)) = c.probability;
    }
    row.fallback = cycle.plan.diagnostics.fallback;
    out.total_cost += row.stage_cost;
    if (row.fallback) {
      ++out.fallback_count;
      out.events.push_back({k, EventKind::Fallback, ""});
    }
    out.trace.push_back(std::move(row));

    const VehicleState av_arr[] = {av_next};
    const VehicleState hv_arr[] = {hv_next};
    const double margin =
      collision_margin(av_arr, hv_arr, geo, sc.constraints.d_safe, after).front();
    out.min_margin = std::min(out.min_margin, margin);
    if (margin < 0.0 && !out.collision) {
      out.collision = true;
      out.events.push_back({k + 1, EventKind::Collision, std::to_string(margin)});
    }
    if (!av_in && av_next.s >= geo.s_conflict) {
      av_in = true;
      out.events.push_back({k + 1, EventKind::AvConflictEntry, ""});
    }
    if (!light && !hv_in && hv_next.s >= geo.s_conflict) {
      hv_in = true;
      out.events.push_back({k + 1, EventKind::HvConflictEntry, ""});
    }

    av = av_next;
    hv = hv_next;
    u_prev = u;
    warm = WarmStart::shifted(cycle.plan);

    const double clear = geo.s_conflict + geo.conflict_length;
    if (sc.sim.stop_when_clear && av.s >= clear && (light || hv.s >= clear)) {
      break;
    }
  }
  out.av_final = av;
  out.hv_final = hv;
  return out;
}

const SweepCell & SweepResult::cell(double probability, PlannerKind planner) const
{
  for (const auto & c : cells) {
    if (c.planner == planner && std::abs(c.probability - probability) < 1e-12) return c;
  }
  throw std::invalid_argument("SweepResult: no such cell");
}

std::vector<double> sweep_distribution(std::size_t children, std::size_t branch, double p)
{
  if (branch >= children) throw std::invalid_argument("sweep_distribution: branch out of range");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("sweep_distribution: p outside [0, 1]");
  std::vector<double> d(children, children > 1 ? (1.0 - p) / static_cast<double>(children - 1) : 0.0);
  d[branch] = children > 1 ? p : 1.0;
  return d;
}

SweepResult run_sweep(const SweepConfig & config)
{
  if (config.grid.empty()) throw ConfigError("grid", "must not be empty");
  if (config.planners.empty()) throw ConfigError("planners", "must not be empty");
  if (config.trials < 1) throw ConfigError("trials", "must be >= 1");
  config.scenario.validate();
  const auto children = config.scenario.hv_after.size();
  const auto branch = static_cast<std::size_t>(config.scenario.sweep_branch());

  // Common random numbers: the first draw of trial i decides its truth in every cell.
  std::vector<double> draws(config.trials);
  for (int i = 0; i < config.trials; ++i) {
    std::mt19937_64 rng(trial_seed(config.seed, static_cast<std::uint64_t>(i)));
    draws[i] = uniform01(rng);
  }

  struct Job
  {
    std::size_t planner;
    std::size_t cell;
    std::size_t truth;
    int trial;
    TrialResult result;
  };
  // A trial depends on its seed only through the truth draw, so one run per
  // (planner, cell, truth) stands for every trial sharing that truth.
  std::vector<Job> jobs;
  std::map<std::tuple<std::size_t, std::size_t, std::size_t>, std::size_t> job_of;
  std::vector<std::vector<SimConfig>> sims(config.planners.size());
  std::vector<std::vector<std::vector<std::size_t>>> trial_job(config.planners.size());
  for (std::size_t pi = 0; pi < config.planners.size(); ++pi) {
    for (std::size_t ci = 0; ci < config.grid.size(); ++ci) {
      auto scenario = config.scenario;
      const auto dist = sweep_distribution(children, branch, config.grid[ci]);
      scenario.sim.truth = dist;
      if (scenario.sim.sweep_belief &&
        scenario.decision.mode == DecisionMode::FixedProbabilities)
      {
        scenario.decision.fixed_probabilities = dist;
      }
      auto sim = make_sim_config(scenario, config.planners[pi], config.seed, config.trials);
      sims[pi].push_back(sim);
      std::vector<std::size_t> per_trial(config.trials);
      for (int i = 0; i < config.trials; ++i) {
        const auto truth = sample_branch(dist, draws[i]);
        const auto key = std::tuple{pi, ci, truth};
        auto it = job_of.find(key);
        if (it == job_of.end()) {
          it = job_of.emplace(key, jobs.size()).first;
          jobs.push_back({pi, ci, truth, i, {}});
        }
        per_trial[i] = it->second;
      }
      trial_job[pi].push_back(std::move(per_trial));
    }
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  const auto worker = [&]() {
    for (std::size_t j = next++; j < jobs.size() && !failed; j = next++) {
      try {
        auto & job = jobs[j];
        job.result = run_closed_loop(
          sims[job.planner][job.cell], trial_seed(config.seed, static_cast<std::uint64_t>(job.trial)));
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
      }
    }
  };
  unsigned threads = config.threads ? config.threads : std::thread::hardware_concurrency();
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(jobs.size())));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto & t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  SweepResult result;
  for (std::size_t ci = 0; ci < config.grid.size(); ++ci) {
    for (std::size_t pi = 0; pi < config.planners.size(); ++pi) {
      SweepCell cell;
      cell.probability = config.grid[ci];
      cell.planner = config.planners[pi];
      cell.n = config.trials;
      for (int i = 0; i < config.trials; ++i) {
        const auto & r = jobs[trial_job[pi][ci][i]].result;
        cell.costs.push_back(r.total_cost);
        cell.collisions += r.collision ? 1 : 0;
        cell.fallbacks += r.fallback_count > 0 ? 1 : 0;
      }
      double sum = 0.0;
      for (double c : cell.costs) sum += c;
      cell.mean_cost = sum / cell.n;
      double sq = 0.0;
      for (double c : cell.costs) sq += (c - cell.mean_cost) * (c - cell.mean_cost);
      cell.std_cost = cell.n > 1 ? std::sqrt(sq / (cell.n - 1)) : 0.0;
      result.cells.push_back(std::move(cell));
    }
  }
  return result;
}

}  // namespace branch_mpc
