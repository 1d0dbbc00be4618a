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

#ifndef BRANCH_MPC__IO_HPP_
#define BRANCH_MPC__IO_HPP_

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "branch_mpc/baselines.hpp"
#include "branch_mpc/config.hpp"
#include "branch_mpc/sim.hpp"

namespace branch_mpc
{

/// Parses a scenario config, filling documented defaults for absent keys.
/// Unknown keys and type mismatches raise ConfigError with the field path.
ScenarioConfig config_from_json(const nlohmann::json & j);
nlohmann::json config_to_json(const ScenarioConfig & config);

/// Reads and validates a config file. Throws ConfigError.
ScenarioConfig load_config(const std::filesystem::path & path);
void save_config(const ScenarioConfig & config, const std::filesystem::path & path);

/// FNV-1a 64 of the canonical JSON serialization.
std::uint64_t config_hash(const ScenarioConfig & config);
std::string hex64(std::uint64_t value);

/// plan.csv columns:
///   branch_id,branch,probability,weight,step,t,av_s,av_v,av_u,hv_s,hv_v,hv_u
/// One row per leg and state index 0..horizon; the inputs are empty on the
/// terminal row. plan.json holds the tree layout, diagnostics, hash and seed.
void write_plan(
  const std::filesystem::path & dir, const CycleOutput & cycle, const ScenarioConfig & config,
  PlannerKind planner, std::uint64_t seed);

/// trace.csv columns:
///   step,t,av_s,av_v,av_u,hv_s,hv_v,hv_u,stage_cost,fallback,p_<branch>...
/// with one probability column per child in config order. events.json holds
/// the event log, totals, safety flags, hash and seed.
void write_trial(
  const std::filesystem::path & dir, const TrialResult & result, const ScenarioConfig & config,
  std::uint64_t seed);

/// sweep.csv columns: probability,planner,mean_cost,std,n
/// sweep.json holds the grid, per-cell safety counts, hash and seed.
void write_sweep(
  const std::filesystem::path & dir, const SweepResult & result, const SweepConfig & config);

}  // namespace branch_mpc

#endif  // BRANCH_MPC__IO_HPP_
