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

// Command-line front end: plan, run and sweep on a scenario config.

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "branch_mpc/baselines.hpp"
#include "branch_mpc/io.hpp"
#include "branch_mpc/sim.hpp"

namespace
{

constexpr int kExitConfig = 2;
constexpr int kExitFallback = 3;

std::vector<double> parse_grid(const std::string & text)
{
  std::vector<double> grid;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double p = 0.0;
    try {
      p = std::stod(item, &used);
    } catch (const std::exception &) {
      used = 0;
    }
    if (used == 0 || used != item.size()) {
      throw branch_mpc::ConfigError("grid", "cannot parse '" + item + "'");
    }
    if (!(p >= 0.0 && p <= 1.0)) throw branch_mpc::ConfigError("grid", "entries must lie in [0, 1]");
    grid.push_back(p);
  }
  if (grid.empty()) throw branch_mpc::ConfigError("grid", "must not be empty");
  return grid;
}

}  // namespace

int main(int argc, char ** argv)
{
  using namespace branch_mpc;

  CLI::App app{"Branch MPC planner and closed-loop simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  std::string planner_name = "branch";
  int trials = 200;
  std::string grid_text = "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1";
  unsigned threads = 0;

  const auto common = [&](CLI::App * cmd) {
    cmd->add_option("--config", config_path, "scenario config (JSON)")->required();
    cmd->add_option("--seed", seed, "random seed");
    cmd->add_option("--out", out_dir, "output directory");
  };
  auto * plan_cmd = app.add_subcommand("plan", "solve one planning cycle at the initial state");
  common(plan_cmd);
  plan_cmd->add_option("--planner", planner_name, "branch|robust|prescient|contingency");
  auto * run_cmd = app.add_subcommand("run", "one closed-loop trial");
  common(run_cmd);
  run_cmd->add_option("--planner", planner_name, "branch|robust|prescient|contingency");
  auto * sweep_cmd = app.add_subcommand("sweep", "Monte-Carlo sweep over truth probabilities");
  common(sweep_cmd);
  sweep_cmd->add_option("--planner", planner_name, "restrict to one planner (default: all)");
  sweep_cmd->add_option("--trials", trials, "trials per cell")->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--grid", grid_text, "comma-separated probabilities");
  sweep_cmd->add_option("--threads", threads, "worker threads (0: hardware)");

  CLI11_PARSE(app, argc, argv);

  try {
    const ScenarioConfig config = load_config(config_path);
    const bool one_planner = !sweep_cmd->parsed() || sweep_cmd->count("--planner") > 0;
    const PlannerKind planner = planner_kind_from_string(planner_name);

    if (plan_cmd->parsed()) {
      const auto sim = make_sim_config(config, planner, seed);
      std::mt19937_64 rng(seed);
      const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      CycleInput in;
      in.hv = config.hv_init;
      in.av = config.av_init;
      in.u_prev = config.sim.u_prev;
      in.oracle = static_cast<int>(sample_branch(sim.truth, u)) + 1;
      const auto cycle = plan_cycle(planner, config, in);
      write_plan(out_dir, cycle, config, planner, seed);
      std::cout << "plan: " << cycle.plan.legs.size() << " legs, cost "
                << cycle.plan.diagnostics.cost << ", first input " << cycle.control.u << '\n';
      return cycle.plan.diagnostics.fallback ? kExitFallback : 0;
    }
    if (run_cmd->parsed()) {
      const auto sim = make_sim_config(config, planner, seed);
      const auto result = run_closed_loop(sim, seed);
      write_trial(out_dir, result, config, seed);
      std::cout << "run: " << result.trace.size() << " steps, truth '" << result.truth_name
                << "', cost " << result.total_cost << (result.collision ? ", COLLISION" : "")
                << '\n';
      return result.fallback_count > 0 ? kExitFallback : 0;
    }
    SweepConfig sweep;
    sweep.scenario = config;
    if (one_planner) sweep.planners = {planner};
    sweep.grid = parse_grid(grid_text);
    sweep.trials = trials;
    sweep.seed = seed;
    sweep.threads = threads;
    const auto result = run_sweep(sweep);
    write_sweep(out_dir, result, sweep);
    bool fallback = false;
    for (const auto & c : result.cells) {
      std::cout << c.probability << ' ' << to_string(c.planner) << ' ' << c.mean_cost << '\n';
      fallback = fallback || c.fallbacks > 0;
    }
    return fallback ? kExitFallback : 0;
  } catch (const ConfigError & e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument & e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception & e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
