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

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "branch_mpc/io.hpp"
#include "test_support.hpp"

namespace branch_mpc
{
namespace
{

namespace fs = std::filesystem;
using nlohmann::json;
using test::bundled;

fs::path scratch(const std::string & name)
{
  const auto dir = fs::temp_directory_path() / ("branch_mpc_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string read_file(const fs::path & path)
{
  std::ifstream in(path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::string> read_lines(const fs::path & path)
{
  std::ifstream in(path);
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

json bundled_json(const std::string & name)
{
  std::ifstream in(test::config_path(name));
  return json::parse(in, nullptr, true, true);
}

// Field path reported for a modified bundled config.
std::string error_field(json j)
{
  try {
    config_from_json(j).validate();
  } catch (const ConfigError & e) {
    return e.field();
  }
  return "<accepted>";
}

TEST(Io, BundledConfigsLoad)
{
  for (const char * name : {"traffic_light.json", "merging.json", "junction.json", "intersection.json"}) {
    EXPECT_NO_THROW(bundled(name)) << name;
  }
  const auto light = bundled("traffic_light.json");
  EXPECT_EQ(light.decision.fixed_probabilities, (std::vector<double>{0.5, 0.5}));
  EXPECT_EQ(light.geometry.kind, ScenarioKind::TrafficLight);
}

TEST(Io, RoundTrip)
{
  for (const char * name : {"traffic_light.json", "merging.json", "junction.json", "intersection.json"}) {
    const auto config = bundled(name);
    EXPECT_EQ(config_from_json(config_to_json(config)), config) << name;
    const auto dir = scratch("roundtrip");
    save_config(config, dir / "c.json");
    EXPECT_EQ(load_config(dir / "c.json"), config) << name;
    EXPECT_EQ(config_hash(load_config(dir / "c.json")), config_hash(config));
  }
}

TEST(Io, DefaultsInstalled)
{
  auto j = bundled_json("merging.json");
  j["weights"].erase("w_j");
  j.erase("constraints");
  const auto c = config_from_json(j);
  EXPECT_EQ(c.weights.w_j, CostWeights{}.w_j);
  EXPECT_EQ(c.constraints, PlannerConstraints{});
  EXPECT_EQ(c.constraints.u_min, -4.0);
  EXPECT_EQ(c.constraints.u_max, 3.0);
  EXPECT_EQ(c.constraints.d_safe, 10.0);
  EXPECT_EQ(c.constraints.b_max, 4.0);
}

TEST(Io, ErrorsNameTheField)
{
  const auto base = bundled_json("merging.json");
  auto j = base;
  j["geometry"]["s_br"] = j["geometry"]["s_conflict"];
  EXPECT_EQ(error_field(j), "geometry.s_br");

  j = base;
  j["weights"]["w_q"] = 1.0;
  EXPECT_EQ(error_field(j), "weights.w_q");

  j = base;
  j["grid"]["dt"] = "fast";
  EXPECT_EQ(error_field(j), "grid.dt");

  j = base;
  j["hv_policies"]["after"][1]["v_ref"] = -3.0;
  EXPECT_EQ(error_field(j), "hv_policies.after[1].v_ref");

  j = base;
  j["decision"]["probabilities"] = {0.5, 0.2, 0.2};
  EXPECT_EQ(error_field(j), "decision");

  j = base;
  j["scenario"] = "roundabout";
  EXPECT_EQ(error_field(j), "scenario");

  j = base;
  j["constraints"]["d_safe"] = 0.0;
  EXPECT_EQ(error_field(j), "constraints.d_safe");

  EXPECT_THROW(load_config("/nonexistent/config.json"), ConfigError);
}

TEST(Io, PlanFiles)
{
  const auto config = bundled("merging.json");
  CycleInput in;
  in.hv = config.hv_init;
  in.av = config.av_init;
  const auto cycle = plan_cycle(PlannerKind::Branch, config, in);
  const auto dir = scratch("plan");
  write_plan(dir, cycle, config, PlannerKind::Branch, 42);
  const auto lines = read_lines(dir / "plan.csv");
  ASSERT_FALSE(lines.empty());
  EXPECT_EQ(lines[0], "branch_id,branch,probability,weight,step,t,av_s,av_v,av_u,hv_s,hv_v,hv_u");
  const auto rows = static_cast<std::size_t>(3 * (config.horizon_steps() + 1));
  EXPECT_EQ(lines.size(), rows + 1);
  for (const char * name : {",fast,", ",keep,", ",slow,"}) {
    EXPECT_NE(read_file(dir / "plan.csv").find(name), std::string::npos) << name;
  }
  const auto meta = json::parse(read_file(dir / "plan.json"));
  EXPECT_EQ(meta.at("seed"), 42);
  EXPECT_EQ(meta.at("config_hash"), hex64(config_hash(config)));
  EXPECT_EQ(meta.at("legs").size(), 3u);
}

TEST(Io, TrialFilesAreReproducible)
{
  const auto config = bundled("merging.json");
  const auto sim = make_sim_config(config, PlannerKind::Branch, 5);
  const auto a = scratch("trial_a");
  const auto b = scratch("trial_b");
  write_trial(a, run_closed_loop(sim, 5), config, 5);
  write_trial(b, run_closed_loop(sim, 5), config, 5);
  EXPECT_EQ(read_file(a / "trace.csv"), read_file(b / "trace.csv"));
  EXPECT_EQ(read_file(a / "events.json"), read_file(b / "events.json"));
  const auto lines = read_lines(a / "trace.csv");
  EXPECT_EQ(
    lines.at(0), "step,t,av_s,av_v,av_u,hv_s,hv_v,hv_u,stage_cost,fallback,p_fast,p_keep,p_slow");
  const auto meta = json::parse(read_file(a / "events.json"));
  EXPECT_EQ(meta.at("seed"), 5);
}

TEST(Io, SweepSummaryHasOneRowPerCell)
{
  SweepConfig sweep;
  sweep.scenario = bundled("traffic_light.json");
  for (int i = 0; i <= 10; ++i) sweep.grid.push_back(i / 10.0);
  sweep.trials = 2;
  sweep.seed = 1;
  const auto result = run_sweep(sweep);
  const auto dir = scratch("sweep");
  write_sweep(dir, result, sweep);
  const auto lines = read_lines(dir / "sweep.csv");
  ASSERT_EQ(lines.size(), 1u + 44u);
  EXPECT_EQ(lines[0], "probability,planner,mean_cost,std,n");
  const auto meta = json::parse(read_file(dir / "sweep.json"));
  EXPECT_EQ(meta.at("seed"), 1);
}

int run_cli(const std::string & args)
{
  const std::string cmd = std::string(BRANCH_MPC_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Io, CliExitCodesAndDeterminism)
{
  const auto dir = scratch("cli");
  const auto config = test::config_path("merging.json").string();
  EXPECT_EQ(run_cli("plan --config " + config + " --seed 3 --out " + (dir / "p").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "p" / "plan.csv"));
  EXPECT_EQ(run_cli("run --config " + config + " --seed 3 --out " + (dir / "a").string()), 0);
  EXPECT_EQ(run_cli("run --config " + config + " --seed 3 --out " + (dir / "b").string()), 0);
  EXPECT_EQ(read_file(dir / "a" / "trace.csv"), read_file(dir / "b" / "trace.csv"));
  EXPECT_EQ(read_file(dir / "a" / "events.json"), read_file(dir / "b" / "events.json"));

  auto j = bundled_json("merging.json");
  j["geometry"]["s_br"] = 200.0;
  std::ofstream(dir / "bad.json") << j.dump();
  EXPECT_EQ(run_cli("plan --config " + (dir / "bad.json").string() + " --out " + (dir / "x").string()), 2);
  EXPECT_EQ(run_cli("run --config " + config + " --planner nobody --out " + (dir / "y").string()), 2);
}

}  // namespace
}  // namespace branch_mpc
