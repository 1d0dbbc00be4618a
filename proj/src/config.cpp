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

#include "branch_mpc/config.hpp"

#include <cmath>
#include <set>

namespace branch_mpc
{

namespace
{

void require(bool ok, const std::string & field, const std::string & message)
{
  if (!ok) {
    throw ConfigError(field, message);
  }
}

bool finite(double x) { return std::isfinite(x); }

void validate_state(const VehicleState & x, const std::string & field)
{
  require(finite(x.s) && finite(x.v), field, "state must be finite");
  require(x.v >= 0.0, field + ".v", "velocity must be >= 0");
}

void validate_policy(const PolicyKind & policy, const std::string & field)
{
  const auto check_params = [&](const InteractionParams & p) {
    try {
      p.validate();
    } catch (const std::invalid_argument & e) {
      throw ConfigError(field, e.what());
    }
  };
  if (const auto * p = std::get_if<VelocityTrack>(&policy)) {
    require(p->v_ref >= 0.0, field + ".v_ref", "must be >= 0");
    check_params(p->gains);
  } else if (const auto * p = std::get_if<VelocityAdapt>(&policy)) {
    require(p->v_ref >= 0.0, field + ".v_ref", "must be >= 0");
    check_params(p->interaction);
  } else if (const auto * p = std::get_if<Stop>(&policy)) {
    require(finite(p->stop_line_s), field + ".stop_line", "must be finite");
    check_params(p->interaction);
  } else if (const auto * p = std::get_if<Cross>(&policy)) {
    require(p->v_ref >= 0.0, field + ".v_ref", "must be >= 0");
    check_params(p->gains);
  }
}

void validate_distribution(const std::vector<double> & p, std::size_t n, const std::string & field)
{
  require(p.size() == n, field, "expected " + std::to_string(n) + " entries");
  double sum = 0.0;
  for (double x : p) {
    require(x >= 0.0 && x <= 1.0, field, "entries must lie in [0, 1]");
    sum += x;
  }
  require(std::abs(sum - 1.0) <= 1e-9, field, "entries must sum to 1");
}

}  // namespace

int ScenarioConfig::horizon_steps() const
{
  return static_cast<int>(std::lround(horizon / dt));
}

int ScenarioConfig::dt_obs_steps() const
{
  return static_cast<int>(std::lround(dt_obs / dt));
}

int ScenarioConfig::sweep_branch() const
{
  return sim.sweep_branch >= 0 ? sim.sweep_branch : static_cast<int>(hv_after.size()) - 1;
}

std::vector<std::string> ScenarioConfig::branch_names() const
{
  std::vector<std::string> names;
  names.reserve(hv_after.size());
  for (const auto & p : hv_after) {
    names.push_back(p.name);
  }
  return names;
}

void ScenarioConfig::validate() const
{
  const auto & g = geometry;
  require(finite(g.s_br) && finite(g.s_conflict), "geometry", "landmarks must be finite");
  require(g.s_br > 0.0, "geometry.s_br", "must be > 0");
  require(g.s_br < g.s_conflict, "geometry.s_br", "must be < geometry.s_conflict");
  require(g.conflict_length > 0.0, "geometry.conflict_length", "must be > 0");

  require(finite(dt) && dt > 0.0, "grid.dt", "must be > 0");
  require(finite(horizon) && horizon_steps() >= 1, "grid.horizon", "must cover at least one step");
  require(finite(dt_obs) && dt_obs >= 0.0, "grid.dt_obs", "must be >= 0");

  validate_state(av_init, "av");
  validate_state(hv_init, "hv");

  validate_policy(hv_before, "hv_policies.before");
  require(!hv_after.empty(), "hv_policies.after", "at least one post-branching policy required");
  std::set<std::string> names;
  for (std::size_t j = 0; j < hv_after.size(); ++j) {
    const std::string field = "hv_policies.after[" + std::to_string(j) + "]";
    require(!hv_after[j].name.empty(), field + ".name", "must not be empty");
    require(names.insert(hv_after[j].name).second, field + ".name", "duplicate branch name");
    validate_policy(hv_after[j].policy, field);
  }

  try {
    decision.validate(hv_after.size());
  } catch (const std::invalid_argument & e) {
    throw ConfigError("decision", e.what());
  }

  const auto & w = weights;
  require(w.w_v >= 0.0 && w.w_u >= 0.0 && w.w_j >= 0.0 && w.w_p >= 0.0, "weights", "must be >= 0");
  require(w.v_ref_av > 0.0, "weights.v_ref_av", "must be > 0");
  require(w.collision_weight > 0.0, "weights.collision_weight", "must be > 0");
  require(w.collision_buffer >= 0.0, "weights.collision_buffer", "must be >= 0");

  const auto & c = constraints;
  require(c.u_min < 0.0 && c.u_max > 0.0, "constraints.u_min", "need u_min < 0 < u_max");
  require(c.v_max > 0.0, "constraints.v_max", "must be > 0");
  require(c.d_safe > 0.0, "constraints.d_safe", "must be > 0");
  require(c.b_max > 0.0, "constraints.b_max", "must be > 0");
  require(c.fallback_decel > 0.0, "constraints.fallback_decel", "must be > 0");

  require(solver.max_iterations >= 1, "solver.max_iterations", "must be >= 1");
  require(solver.tolerance > 0.0, "solver.tolerance", "must be > 0");
  require(solver.max_continuations >= 0, "solver.max_continuations", "must be >= 0");
  require(solver.max_probability_rounds >= 1, "solver.max_probability_rounds", "must be >= 1");

  require(sim.max_steps >= 1, "sim.max_steps", "must be >= 1");
  if (!sim.truth.empty()) {
    validate_distribution(sim.truth, hv_after.size(), "sim.truth");
  }
  const auto n = static_cast<int>(hv_after.size());
  require(sim.sweep_branch >= -1 && sim.sweep_branch < n, "sim.sweep_branch", "out of range");
  require(sim.nominal_branch >= 0 && sim.nominal_branch < n, "sim.nominal_branch", "out of range");
  require(finite(sim.u_prev), "sim.u_prev", "must be finite");
}

}  // namespace branch_mpc
