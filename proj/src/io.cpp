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

#include "branch_mpc/io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace branch_mpc
{

using nlohmann::json;
namespace fs = std::filesystem;

namespace
{

// Strict object reader: records the keys it consumed so leftovers can be
// reported as typos.
class Reader
{
public:
  Reader(const json & j, std::string path)
  : j_(j), path_(std::move(path))
  {
    if (!j_.is_object()) throw ConfigError(where(), "expected an object");
  }

  std::string field(const std::string & key) const
  {
    return path_.empty() ? key : path_ + "." + key;
  }

  const json * get(const std::string & key)
  {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  double number(const std::string & key, double fallback)
  {
    const json * v = get(key);
    if (!v) return fallback;
    if (!v->is_number()) throw ConfigError(field(key), "expected a number");
    return v->get<double>();
  }

  int integer(const std::string & key, int fallback)
  {
    const json * v = get(key);
    if (!v) return fallback;
    if (!v->is_number_integer()) throw ConfigError(field(key), "expected an integer");
    return v->get<int>();
  }

  bool flag(const std::string & key, bool fallback)
  {
    const json * v = get(key);
    if (!v) return fallback;
    if (!v->is_boolean()) throw ConfigError(field(key), "expected true or false");
    return v->get<bool>();
  }

  std::string text(const std::string & key, const std::string & fallback)
  {
    const json * v = get(key);
    if (!v) return fallback;
    if (!v->is_string()) throw ConfigError(field(key), "expected a string");
    return v->get<std::string>();
  }

  std::vector<double> numbers(const std::string & key, const std::vector<double> & fallback)
  {
    const json * v = get(key);
    if (!v) return fallback;
    if (!v->is_array()) throw ConfigError(field(key), "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v->size(); ++i) {
      if (!(*v)[i].is_number()) {
        throw ConfigError(field(key) + "[" + std::to_string(i) + "]", "expected a number");
      }
      out.push_back((*v)[i].get<double>());
    }
    return out;
  }

  void finish() const
  {
    for (const auto & [key, value] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError(field(key), "unknown key");
    }
  }

private:
  std::string where() const { return path_.empty() ? "<root>" : path_; }

  const json & j_;
  std::string path_;
  std::set<std::string> seen_;
};

VehicleState read_state(Reader & parent, const std::string & key, const VehicleState & fallback)
{
  const json * v = parent.get(key);
  if (!v) return fallback;
  Reader r(*v, parent.field(key));
  VehicleState x{r.number("s", fallback.s), r.number("v", fallback.v)};
  r.finish();
  return x;
}

InteractionParams read_params(Reader & r)
{
  InteractionParams p;
  p.d_ref = r.number("d_ref", p.d_ref);
  p.k_v = r.number("k_v", p.k_v);
  p.k_d = r.number("k_d", p.k_d);
  p.b_max = r.number("b_max", p.b_max);
  p.a_max = r.number("a_max", p.a_max);
  return p;
}

PolicyKind read_policy(Reader & r)
{
  const std::string type = r.text("type", "");
  if (type == "constant_speed") return ConstantSpeed{};
  if (type == "velocity_track") {
    const double v_ref = r.number("v_ref", 0.0);
    return VelocityTrack{v_ref, read_params(r)};
  }
  if (type == "velocity_adapt") {
    const double v_ref = r.number("v_ref", 0.0);
    return VelocityAdapt{v_ref, read_params(r)};
  }
  if (type == "stop") {
    const json * line = r.get("stop_line");
    if (!line || !line->is_number()) throw ConfigError(r.field("stop_line"), "number required");
    return Stop{line->get<double>(), read_params(r)};
  }
  if (type == "cross") {
    const double v_ref = r.number("v_ref", 0.0);
    return Cross{v_ref, read_params(r)};
  }
  throw ConfigError(
    r.field("type"),
    "expected constant_speed, velocity_track, velocity_adapt, stop or cross, got '" + type + "'");
}

json params_json(const InteractionParams & p)
{
  return {{"d_ref", p.d_ref}, {"k_v", p.k_v}, {"k_d", p.k_d}, {"b_max", p.b_max},
          {"a_max", p.a_max}};
}

json policy_json(const PolicyKind & policy)
{
  json j = json::object();
  j["type"] = std::string(policy_kind_name(policy));
  const auto add = [&](const InteractionParams & p) { j.update(params_json(p)); };
  if (const auto * p = std::get_if<VelocityTrack>(&policy)) {
    j["v_ref"] = p->v_ref;
    add(p->gains);
  } else if (const auto * p = std::get_if<VelocityAdapt>(&policy)) {
    j["v_ref"] = p->v_ref;
    add(p->interaction);
  } else if (const auto * p = std::get_if<Stop>(&policy)) {
    j["stop_line"] = p->stop_line_s;
    add(p->interaction);
  } else if (const auto * p = std::get_if<Cross>(&policy)) {
    j["v_ref"] = p->v_ref;
    add(p->gains);
  }
  return j;
}

json state_json(const VehicleState & x) { return {{"s", x.s}, {"v", x.v}}; }

void write_text(const fs::path & path, const std::string & text)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

// Shortest text that reads back to the same double.
std::string num(double x)
{
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os << std::setprecision(17) << x;
  std::string s = os.str();
  for (int prec = 1; prec < 17; ++prec) {
    std::ostringstream t;
    t << std::setprecision(prec) << x;
    if (std::stod(t.str()) == x) return t.str();
  }
  return s;
}

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json diagnostics_json(const SolverDiagnostics & d)
{
  return {{"iterations", d.iterations},
          {"continuations", d.continuations},
          {"candidates", d.candidates},
          {"penalty_weight", d.penalty_weight},
          {"penalty_residual", d.penalty_residual},
          {"cost", d.cost},
          {"converged", d.converged},
          {"feasible", d.feasible},
          {"fallback", d.fallback},
          {"probability_rounds", d.probability_rounds},
          {"probabilities_converged", d.probabilities_converged},
          {"warnings", d.warnings}};
}

json meta_json(const ScenarioConfig & config, std::uint64_t seed)
{
  return {{"config_hash", hex64(config_hash(config))},
          {"seed", seed},
          {"scenario", std::string(to_string(config.geometry.kind))},
          {"branches", config.branch_names()}};
}

}  // namespace

ScenarioConfig config_from_json(const json & j)
{
  ScenarioConfig c;
  Reader root(j, "");
  root.get("notes");

  const std::string kind = root.text("scenario", "");
  try {
    c.geometry.kind = scenario_kind_from_string(kind);
  } catch (const std::invalid_argument &) {
    throw ConfigError("scenario", "expected merging, intersection or traffic_light");
  }

  if (const json * g = root.get("geometry")) {
    Reader r(*g, "geometry");
    c.geometry.s_conflict = r.number("s_conflict", c.geometry.s_conflict);
    c.geometry.s_br = r.number("s_br", c.geometry.s_br);
    c.geometry.conflict_length = r.number("conflict_length", c.geometry.conflict_length);
    r.finish();
  }
  if (const json * g = root.get("grid")) {
    Reader r(*g, "grid");
    c.dt = r.number("dt", c.dt);
    c.horizon = r.number("horizon", c.horizon);
    c.dt_obs = r.number("dt_obs", c.dt_obs);
    r.finish();
  }
  c.av_init = read_state(root, "av", c.av_init);
  c.hv_init = read_state(root, "hv", c.hv_init);

  if (const json * p = root.get("hv_policies")) {
    Reader r(*p, "hv_policies");
    if (const json * before = r.get("before")) {
      Reader rb(*before, "hv_policies.before");
      c.hv_before = read_policy(rb);
      rb.finish();
    }
    const json * after = r.get("after");
    if (after) {
      if (!after->is_array()) throw ConfigError("hv_policies.after", "expected an array");
      for (std::size_t i = 0; i < after->size(); ++i) {
        Reader ra((*after)[i], "hv_policies.after[" + std::to_string(i) + "]");
        NamedPolicy np;
        np.name = ra.text("name", "");
        np.policy = read_policy(ra);
        ra.finish();
        c.hv_after.push_back(std::move(np));
      }
    }
    r.finish();
  }
  const auto n = c.hv_after.size();
  const std::vector<double> uniform(n, n ? 1.0 / static_cast<double>(n) : 0.0);

  c.decision.fixed_probabilities = uniform;
  if (const json * d = root.get("decision")) {
    Reader r(*d, "decision");
    const std::string mode = r.text("mode", "fixed");
    if (mode == "fixed") {
      c.decision.mode = DecisionMode::FixedProbabilities;
    } else if (mode == "crossing_frequency") {
      c.decision.mode = DecisionMode::CrossingFrequency;
    } else {
      throw ConfigError("decision.mode", "expected fixed or crossing_frequency");
    }
    c.decision.fixed_probabilities = r.numbers("probabilities", uniform);
    c.decision.beta = r.number("beta", c.decision.beta);
    c.decision.tta_mid = r.number("tta_mid", c.decision.tta_mid);
    c.decision.cross_branch = r.integer("cross_branch", c.decision.cross_branch);
    c.decision.stop_branch = r.integer("stop_branch", c.decision.stop_branch);
    r.finish();
  }
  if (const json * w = root.get("weights")) {
    Reader r(*w, "weights");
    auto & x = c.weights;
    x.w_v = r.number("w_v", x.w_v);
    x.w_u = r.number("w_u", x.w_u);
    x.w_j = r.number("w_j", x.w_j);
    x.w_p = r.number("w_p", x.w_p);
    x.v_ref_av = r.number("v_ref_av", x.v_ref_av);
    x.collision_weight = r.number("collision_weight", x.collision_weight);
    x.collision_buffer = r.number("collision_buffer", x.collision_buffer);
    r.finish();
  }
  if (const json * k = root.get("constraints")) {
    Reader r(*k, "constraints");
    auto & x = c.constraints;
    x.u_min = r.number("u_min", x.u_min);
    x.u_max = r.number("u_max", x.u_max);
    x.v_max = r.number("v_max", x.v_max);
    x.d_safe = r.number("d_safe", x.d_safe);
    x.b_max = r.number("b_max", x.b_max);
    x.fallback_decel = r.number("fallback_decel", x.fallback_decel);
    r.finish();
  }
  if (const json * s = root.get("solver")) {
    Reader r(*s, "solver");
    auto & x = c.solver;
    x.max_iterations = r.integer("max_iterations", x.max_iterations);
    x.tolerance = r.number("tolerance", x.tolerance);
    x.max_continuations = r.integer("max_continuations", x.max_continuations);
    x.max_probability_rounds = r.integer("max_probability_rounds", x.max_probability_rounds);
    x.probability_tolerance = r.number("probability_tolerance", x.probability_tolerance);
    x.restarts = r.flag("restarts", x.restarts);
    r.finish();
  }
  c.sim.truth = c.decision.fixed_probabilities;
  if (const json * s = root.get("sim")) {
    Reader r(*s, "sim");
    auto & x = c.sim;
    x.max_steps = r.integer("max_steps", x.max_steps);
    x.stop_when_clear = r.flag("stop_when_clear", x.stop_when_clear);
    x.shrink_horizon = r.flag("shrink_horizon", x.shrink_horizon);
    x.truth = r.numbers("truth", x.truth);
    x.sweep_branch = r.integer("sweep_branch", x.sweep_branch);
    x.sweep_belief = r.flag("sweep_belief", x.sweep_belief);
    x.nominal_branch = r.integer("nominal_branch", x.nominal_branch);
    x.u_prev = r.number("u_prev", x.u_prev);
    r.finish();
  }
  root.finish();
  c.validate();
  return c;
}

json config_to_json(const ScenarioConfig & c)
{
  json after = json::array();
  for (const auto & p : c.hv_after) {
    json e = policy_json(p.policy);
    e["name"] = p.name;
    after.push_back(e);
  }
  const auto & w = c.weights;
  const auto & k = c.constraints;
  const auto & s = c.solver;
  return {
    {"scenario", std::string(to_string(c.geometry.kind))},
    {"geometry",
     {{"s_conflict", c.geometry.s_conflict},
      {"s_br", c.geometry.s_br},
      {"conflict_length", c.geometry.conflict_length}}},
    {"grid", {{"dt", c.dt}, {"horizon", c.horizon}, {"dt_obs", c.dt_obs}}},
    {"av", state_json(c.av_init)},
    {"hv", state_json(c.hv_init)},
    {"hv_policies", {{"before", policy_json(c.hv_before)}, {"after", after}}},
    {"decision",
     {{"mode",
       c.decision.mode == DecisionMode::FixedProbabilities ? "fixed" : "crossing_frequency"},
      {"probabilities", c.decision.fixed_probabilities},
      {"beta", c.decision.beta},
      {"tta_mid", c.decision.tta_mid},
      {"cross_branch", c.decision.cross_branch},
      {"stop_branch", c.decision.stop_branch}}},
    {"weights",
     {{"w_v", w.w_v},
      {"w_u", w.w_u},
      {"w_j", w.w_j},
      {"w_p", w.w_p},
      {"v_ref_av", w.v_ref_av},
      {"collision_weight", w.collision_weight},
      {"collision_buffer", w.collision_buffer}}},
    {"constraints",
     {{"u_min", k.u_min},
      {"u_max", k.u_max},
      {"v_max", k.v_max},
      {"d_safe", k.d_safe},
      {"b_max", k.b_max},
      {"fallback_decel", k.fallback_decel}}},
    {"solver",
     {{"max_iterations", s.max_iterations},
      {"tolerance", s.tolerance},
      {"max_continuations", s.max_continuations},
      {"max_probability_rounds", s.max_probability_rounds},
      {"probability_tolerance", s.probability_tolerance},
      {"restarts", s.restarts}}},
    {"sim",
     {{"max_steps", c.sim.max_steps},
      {"stop_when_clear", c.sim.stop_when_clear},
      {"shrink_horizon", c.sim.shrink_horizon},
      {"truth", c.sim.truth},
      {"sweep_branch", c.sim.sweep_branch},
      {"sweep_belief", c.sim.sweep_belief},
      {"nominal_branch", c.sim.nominal_branch},
      {"u_prev", c.sim.u_prev}}},
  };
}

ScenarioConfig load_config(const fs::path & path)
{
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open " + path.string());
  json j;
  try {
    j = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error & e) {
    throw ConfigError("<file>", std::string("parse error: ") + e.what());
  }
  return config_from_json(j);
}

void save_config(const ScenarioConfig & config, const fs::path & path)
{
  write_text(path, config_to_json(config).dump(2) + "\n");
}

std::uint64_t config_hash(const ScenarioConfig & config)
{
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : config_to_json(config).dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value)
{
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << value;
  return os.str();
}

void write_plan(
  const fs::path & dir, const CycleOutput & cycle, const ScenarioConfig & config,
  PlannerKind planner, std::uint64_t seed)
{
  fs::create_directories(dir);
  std::ostringstream csv;
  csv << "branch_id,branch,probability,weight,step,t,av_s,av_v,av_u,hv_s,hv_v,hv_u\n";
  for (const auto & leg : cycle.plan.legs) {
    for (std::size_t k = 0; k < leg.av.size(); ++k) {
      csv << leg.branch_id << ',' << leg.name << ',' << num(leg.probability) << ','
          << num(leg.weight) << ',' << k << ',' << num(static_cast<double>(k) * config.dt) << ','
          << num(leg.av[k].s) << ',' << num(leg.av[k].v) << ','
          << (k < leg.u_av.size() ? num(leg.u_av[k]) : "") << ',' << num(leg.hv[k].s) << ','
          << num(leg.hv[k].v) << ',' << (k < leg.u_hv.size() ? num(leg.u_hv[k]) : "") << '\n';
    }
  }
  write_text(dir / "plan.csv", csv.str());

  json legs = json::array();
  for (const auto & leg : cycle.plan.legs) {
    legs.push_back({{"branch_id", leg.branch_id},
                    {"name", leg.name},
                    {"probability", leg.probability},
                    {"weight", leg.weight},
                    {"enforced", leg.enforced}});
  }
  json meta = meta_json(config, seed);
  meta["planner"] = std::string(to_string(planner));
  meta["t_br"] = cycle.plan.t_br;
  meta["dt_obs_steps"] = cycle.plan.dt_obs_steps;
  meta["shared_steps"] = cycle.plan.shared_steps;
  meta["control"] = cycle.control.u;
  meta["legs"] = legs;
  meta["diagnostics"] = diagnostics_json(cycle.plan.diagnostics);
  meta["config"] = config_to_json(config);
  write_text(dir / "plan.json", meta.dump(2) + "\n");
}

void write_trial(
  const fs::path & dir, const TrialResult & r, const ScenarioConfig & config, std::uint64_t seed)
{
  fs::create_directories(dir);
  std::ostringstream csv;
  csv << "step,t,av_s,av_v,av_u,hv_s,hv_v,hv_u,stage_cost,fallback";
  for (const auto & name : config.branch_names()) csv << ",p_" << name;
  csv << '\n';
  for (const auto & row : r.trace) {
    csv << row.step << ',' << num(row.t) << ',' << num(row.av.s) << ',' << num(row.av.v) << ','
        << num(row.u_av) << ',' << num(row.hv.s) << ',' << num(row.hv.v) << ','
        << num(row.u_hv) << ',' << num(row.stage_cost) << ',' << (row.fallback ? 1 : 0);
    for (double p : row.probabilities) csv << ',' << num(p);
    csv << '\n';
  }
  write_text(dir / "trace.csv", csv.str());

  json events = json::array();
  for (const auto & e : r.events) {
    events.push_back({{"step", e.step},
                      {"t", e.step * config.dt},
                      {"kind", std::string(to_string(e.kind))},
                      {"detail", e.detail}});
  }
  json meta = meta_json(config, seed);
  meta["planner"] = std::string(to_string(r.planner));
  meta["trial_seed"] = r.seed;
  meta["truth"] = r.truth ? json(*r.truth) : json(nullptr);
  meta["truth_name"] = r.truth_name;
  meta["total_cost"] = r.total_cost;
  meta["steps"] = r.trace.size();
  meta["collision"] = r.collision;
  meta["fallback_count"] = r.fallback_count;
  meta["min_margin"] = finite_or_null(r.min_margin);
  meta["av_final"] = state_json(r.av_final);
  meta["hv_final"] = state_json(r.hv_final);
  meta["events"] = events;
  write_text(dir / "events.json", meta.dump(2) + "\n");
}

void write_sweep(const fs::path & dir, const SweepResult & result, const SweepConfig & config)
{
  fs::create_directories(dir);
  std::ostringstream csv;
  csv << "probability,planner,mean_cost,std,n\n";
  json cells = json::array();
  for (const auto & c : result.cells) {
    csv << num(c.probability) << ',' << to_string(c.planner) << ',' << num(c.mean_cost) << ','
        << num(c.std_cost) << ',' << c.n << '\n';
    cells.push_back({{"probability", c.probability},
                     {"planner", std::string(to_string(c.planner))},
                     {"mean_cost", c.mean_cost},
                     {"std", c.std_cost},
                     {"n", c.n},
                     {"collisions", c.collisions},
                     {"trials_with_fallback", c.fallbacks}});
  }
  write_text(dir / "sweep.csv", csv.str());

  const auto & sc = config.scenario;
  json meta = meta_json(sc, config.seed);
  meta["grid"] = config.grid;
  meta["trials"] = config.trials;
  meta["sweep_branch"] = sc.branch_names().at(static_cast<std::size_t>(sc.sweep_branch()));
  meta["cells"] = cells;
  write_text(dir / "sweep.json", meta.dump(2) + "\n");
}

}  // namespace branch_mpc
