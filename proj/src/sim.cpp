#include "cvtalloc/sim.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <ostream>
#include <set>

#include "cvtalloc/config.hpp"
#include "cvtalloc/errors.hpp"
#include "cvtalloc/kernels.hpp"

namespace cvtalloc::sim {
namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& msg) { throw Error(ErrorKind::InvalidScenario, msg); }

// Default perturbation: every third agent (ids 1, 4, 7, ...) has its setpoint
// moved alternately 4 F up and down at mid-run.
std::vector<SetpointChange> default_changes(int n, int horizon) {
  std::vector<SetpointChange> out;
  bool up = true;
  for (AgentId id = 1; id < n; id += 3, up = !up) out.push_back({horizon / 2, id, up ? 4.0 : -4.0, true});
  return out;
}

constexpr double kScheduleMean = 300.0;
constexpr double kScheduleAmplitude = 40.0;

// A cold day with gentle closed loops: every agent keeps heating through the
// whole horizon, so |u| tracks demand without sign changes.
constexpr std::array<double, 3> kSimPoles{0.95, 0.96, 0.97};
constexpr double kSimSigma2 = 100.0;

double num(const json& j, const char* key) {
  if (!j.is_number()) bad(fmt::format("'{}' must be a number", key));
  return j.get<double>();
}

int integer(const json& j, const char* key) {
  if (!j.is_number_integer()) bad(fmt::format("'{}' must be an integer", key));
  return j.get<int>();
}

std::string cell(double v) { return fmt::format("{:.15g}", v); }

}  // namespace

void Scenario::validate() const {
  if (n_agents < 1) bad("n_agents must be at least 1");
  if (horizon < 1) bad("horizon must be at least 1");
  if (!(ts_minutes > 0.0)) bad("ts_minutes must be positive");
  if (rounds_per_step < 0) bad("rounds_per_step must be nonnegative");
  if (!(sigma2 > 0.0)) bad("sigma2 must be positive");
  if (domain.a < 0.0 || !(domain.a < domain.b)) bad("domain must satisfy 0 <= a < b (power magnitudes)");
  if (!nominal_schedule) {
    if (static_cast<std::size_t>(horizon) != power_schedule.size())
      bad(fmt::format("horizon is {} but power_schedule has {} entries", horizon, power_schedule.size()));
    for (std::size_t k = 0; k < power_schedule.size(); ++k) {
      const double mean = power_schedule[k] / n_agents;
      if (!(mean > domain.a && mean < domain.b))
        bad(fmt::format("r({})/N = {:.15g} is outside ({}, {})", k, mean, domain.a, domain.b));
    }
  }
  if (!matched_setpoints && setpoints_f.size() != static_cast<std::size_t>(n_agents))
    bad(fmt::format("setpoints_f has {} entries for {} agents", setpoints_f.size(), n_agents));
  for (double sp : setpoints_f)
    if (!std::isfinite(sp)) bad("setpoints must be finite");
  for (const auto& c : setpoint_changes) {
    if (c.step < 0 || c.step >= horizon) bad(fmt::format("setpoint change at step {} is outside the horizon", c.step));
    if (c.agent && (*c.agent < 0 || *c.agent >= n_agents)) bad(fmt::format("setpoint change names unknown agent {}", *c.agent));
  }
}

std::vector<double> sinusoid_schedule(int n, int horizon, double mean, double amplitude, double period) {
  std::vector<double> r(static_cast<std::size_t>(std::max(horizon, 0)));
  for (int k = 0; k < horizon; ++k)
    r[static_cast<std::size_t>(k)] = n * (mean + amplitude * std::sin(2.0 * std::numbers::pi * k / period));
  return r;
}

Scenario default_scenario() {
  Scenario sc;
  sc.sigma2 = kSimSigma2;
  sc.poles = kSimPoles;
  sc.weather.outdoor_mean_f = 40.0;
  sc.weather.outdoor_amplitude_f = 8.0;
  sc.weather.solar_peak_w = 150.0;
  sc.nominal_schedule = true;
  sc.matched_setpoints = true;
  sc.setpoint_changes = default_changes(sc.n_agents, sc.horizon);
  return sc;
}

Scenario scenario_from_json(const json& j) {
  if (!j.is_object()) bad("scenario must be a JSON object");
  static const std::set<std::string> known{"n_agents", "horizon", "ts_minutes", "domain", "sigma2",
                                           "power_schedule", "disturbance", "weather", "setpoints_f",
                                           "base_setpoint_f", "setpoint_changes", "seed",
                                           "rounds_per_step", "poles", "param_variances"};
  for (const auto& [key, _] : j.items())
    if (!known.contains(key)) bad(fmt::format("unknown scenario field '{}'", key));

  Scenario sc = default_scenario();
  if (j.contains("n_agents")) sc.n_agents = integer(j["n_agents"], "n_agents");
  if (j.contains("horizon")) sc.horizon = integer(j["horizon"], "horizon");
  if (j.contains("ts_minutes")) sc.ts_minutes = num(j["ts_minutes"], "ts_minutes");
  if (j.contains("domain")) {
    const auto& d = j["domain"];
    if (!d.is_array() || d.size() != 2) bad("domain must be [a, b]");
    try {
      sc.domain = Domain1D::make(num(d[0], "domain"), num(d[1], "domain"));
    } catch (const Error& e) {
      bad(e.what());
    }
  }
  if (j.contains("sigma2")) sc.sigma2 = num(j["sigma2"], "sigma2");
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() && !(j["seed"].is_number_integer() && j["seed"].get<long long>() >= 0))
      bad("seed must be a nonnegative integer");
    sc.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("rounds_per_step")) sc.rounds_per_step = integer(j["rounds_per_step"], "rounds_per_step");
  if (j.contains("disturbance")) {
    if (!j["disturbance"].is_string()) bad("disturbance must be \"synthetic\" or a CSV path");
    sc.disturbance = j["disturbance"].get<std::string>();
  }
  if (j.contains("weather")) {
    const auto& w = j["weather"];
    if (!w.is_object()) bad("weather must be an object");
    auto& sw = sc.weather;
    for (const auto& [key, v] : w.items()) {
      if (key == "outdoor_mean_f") sw.outdoor_mean_f = num(v, "outdoor_mean_f");
      else if (key == "outdoor_amplitude_f") sw.outdoor_amplitude_f = num(v, "outdoor_amplitude_f");
      else if (key == "outdoor_peak_hour") sw.outdoor_peak_hour = num(v, "outdoor_peak_hour");
      else if (key == "solar_peak_w") sw.solar_peak_w = num(v, "solar_peak_w");
      else if (key == "sunrise_hour") sw.sunrise_hour = num(v, "sunrise_hour");
      else if (key == "sunset_hour") sw.sunset_hour = num(v, "sunset_hour");
      else bad(fmt::format("unknown weather field '{}'", key));
    }
  }
  if (j.contains("poles")) {
    const auto& p = j["poles"];
    if (!p.is_array() || p.size() != 3) bad("poles must be an array of 3 numbers");
    for (std::size_t i = 0; i < 3; ++i) sc.poles[i] = num(p[i], "poles");
  }
  if (j.contains("param_variances")) {
    const auto& pv = j["param_variances"];
    if (!pv.is_object()) bad("param_variances must be an object");
    for (const auto& [key, v] : pv.items()) {
      if (key == "k") sc.params.k_variance = num(v, "param_variances.k");
      else if (key == "c") sc.params.c_variance = num(v, "param_variances.c");
      else bad(fmt::format("unknown param_variances field '{}'", key));
    }
  }

  if (j.contains("power_schedule")) {
    const auto& s = j["power_schedule"];
    sc.nominal_schedule = false;
    if (s.is_array()) {
      sc.power_schedule.clear();
      for (const auto& v : s) sc.power_schedule.push_back(num(v, "power_schedule"));
    } else if (s.is_string() && s.get<std::string>() == "nominal") {
      sc.nominal_schedule = true;
      sc.power_schedule.clear();
    } else if (s.is_object() && s.contains("sinusoid") && s.size() == 1) {
      const auto& o = s["sinusoid"];
      if (!o.is_object()) bad("sinusoid must be an object");
      double mean = kScheduleMean, amp = kScheduleAmplitude, period = sc.horizon;
      for (const auto& [key, v] : o.items()) {
        if (key == "mean_per_agent") mean = num(v, "mean_per_agent");
        else if (key == "amplitude_per_agent") amp = num(v, "amplitude_per_agent");
        else if (key == "period_steps") period = num(v, "period_steps");
        else bad(fmt::format("unknown sinusoid field '{}'", key));
      }
      sc.power_schedule = sinusoid_schedule(sc.n_agents, sc.horizon, mean, amp, period);
    } else {
      bad("power_schedule must be an array, \"nominal\" or {\"sinusoid\": {...}}");
    }
  }

  if (j.contains("base_setpoint_f")) sc.base_setpoint_f = num(j["base_setpoint_f"], "base_setpoint_f");
  if (j.contains("setpoints_f")) {
    const auto& s = j["setpoints_f"];
    sc.setpoints_f.clear();
    sc.matched_setpoints = false;
    if (s.is_number())
      sc.setpoints_f.assign(static_cast<std::size_t>(std::max(sc.n_agents, 0)), s.get<double>());
    else if (s.is_array())
      for (const auto& v : s) sc.setpoints_f.push_back(num(v, "setpoints_f"));
    else if (s.is_string() && s.get<std::string>() == "matched")
      sc.matched_setpoints = true;
    else
      bad("setpoints_f must be a number, an array or \"matched\"");
  }

  if (j.contains("setpoint_changes")) {
    const auto& s = j["setpoint_changes"];
    if (!s.is_array()) bad("setpoint_changes must be an array");
    sc.setpoint_changes.clear();
    for (const auto& c : s) {
      if (!c.is_object() || !c.contains("step") || (c.contains("setpoint_f") == c.contains("delta_f")))
        bad("each setpoint change needs \"step\" and exactly one of \"setpoint_f\" or \"delta_f\"");
      SetpointChange ch;
      ch.step = integer(c["step"], "step");
      ch.relative = c.contains("delta_f");
      ch.value = ch.relative ? num(c["delta_f"], "delta_f") : num(c["setpoint_f"], "setpoint_f");
      if (c.contains("agent")) ch.agent = integer(c["agent"], "agent");
      for (const auto& [key, _] : c.items())
        if (key != "step" && key != "setpoint_f" && key != "delta_f" && key != "agent")
          bad(fmt::format("unknown setpoint change field '{}'", key));
      sc.setpoint_changes.push_back(ch);
    }
  } else {
    sc.setpoint_changes = default_changes(sc.n_agents, sc.horizon);
  }
  sc.validate();
  return sc;
}

json scenario_to_json(const Scenario& sc) {
  json j;
  j["n_agents"] = sc.n_agents;
  j["horizon"] = sc.horizon;
  j["ts_minutes"] = sc.ts_minutes;
  j["domain"] = {sc.domain.a, sc.domain.b};
  j["sigma2"] = sc.sigma2;
  if (sc.nominal_schedule)
    j["power_schedule"] = "nominal";
  else
    j["power_schedule"] = sc.power_schedule;
  j["disturbance"] = sc.disturbance;
  j["weather"] = {{"outdoor_mean_f", sc.weather.outdoor_mean_f},
                  {"outdoor_amplitude_f", sc.weather.outdoor_amplitude_f},
                  {"outdoor_peak_hour", sc.weather.outdoor_peak_hour},
                  {"solar_peak_w", sc.weather.solar_peak_w},
                  {"sunrise_hour", sc.weather.sunrise_hour},
                  {"sunset_hour", sc.weather.sunset_hour}};
  if (sc.matched_setpoints)
    j["setpoints_f"] = "matched";
  else
    j["setpoints_f"] = sc.setpoints_f;
  j["base_setpoint_f"] = sc.base_setpoint_f;
  j["setpoint_changes"] = json::array();
  for (const auto& c : sc.setpoint_changes) {
    json cj{{"step", c.step}, {c.relative ? "delta_f" : "setpoint_f", c.value}};
    if (c.agent) cj["agent"] = *c.agent;
    j["setpoint_changes"].push_back(cj);
  }
  j["seed"] = sc.seed;
  j["rounds_per_step"] = sc.rounds_per_step;
  j["poles"] = sc.poles;
  j["param_variances"] = {{"k", sc.params.k_variance}, {"c", sc.params.c_variance}};
  return j;
}

std::uint64_t agent_seed(std::uint64_t seed, AgentId id) {
  // splitmix64 finaliser over (seed, id): decorrelates neighbouring ids.
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(id) + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {

// Closed-loop equilibrium state of one agent for a constant disturbance.
Eigen::Vector3d equilibrium(const Agent& a, double setpoint_f, const Eigen::Vector2d& w) {
  const Eigen::Matrix3d cl = Eigen::Matrix3d::Identity() - a.model.Ad + a.model.Bd * a.gains.K_fb;
  const Eigen::Vector3d rhs = a.model.Bd * (a.gains.N_r * thermal::f_to_c(setpoint_f)) + a.model.Gd * w;
  return cl.fullPivLu().solve(rhs);
}

double equilibrium_input(const Agent& a, double setpoint_f, const Eigen::Vector2d& w) {
  thermal::ControllerGains g = a.gains;
  g.setpoint_f = setpoint_f;
  return thermal::desired_power(g, equilibrium(a, setpoint_f, w));
}

StaticSolution solve_initial(const Scenario& sc, double r0) {
  const int n = sc.n_agents;
  if (!(r0 / n > sc.domain.a && r0 / n < sc.domain.b))
    bad(fmt::format("r(0)/N = {:.15g} is outside ({}, {})", r0 / n, sc.domain.a, sc.domain.b));
  const auto problem = StaticProblem::make(sc.domain, static_cast<std::size_t>(n),
                                           DensitySpec::gaussian(r0 / n, sc.sigma2).with_free("mu"), r0);
  auto sol = solve(problem);
  if (!sol.converged)
    throw Error(ErrorKind::SolverDiverged, fmt::format("static allocation for r(0) = {} failed: {}", r0, sol.diagnostic));
  return sol;
}

// Unconstrained closed-loop demand sum_i |u_i(k)| from equilibrium.
std::vector<double> nominal_demand(const Scenario& sc, const std::vector<Agent>& agents,
                                   const thermal::Disturbance& dist) {
  std::vector<double> r(static_cast<std::size_t>(sc.horizon), 0.0);
  for (const auto& a : agents) {
    Eigen::Vector3d x = equilibrium(a, a.gains.setpoint_f, dist.w(0.0));
    for (int k = 0; k < sc.horizon; ++k) {
      const double u = thermal::desired_power(a.gains, x);
      r[static_cast<std::size_t>(k)] += std::fabs(u);
      x = thermal::step_plant(x, u, dist.w(k * sc.ts_minutes), a.model).x;
    }
  }
  return r;
}

}  // namespace

SimState initialize(const Scenario& scenario) {
  scenario.validate();
  SimState st;
  st.scenario = scenario;
  Scenario& sc = st.scenario;
  const int n = sc.n_agents;

  st.disturbance = sc.disturbance == "synthetic"
                       ? thermal::Disturbance::synthetic(sc.weather, sc.horizon, sc.ts_minutes)
                       : thermal::Disturbance::from_csv(sc.disturbance);
  const Eigen::Vector2d w0 = st.disturbance.w(0.0);

  for (AgentId id = 0; id < n; ++id) {
    Agent a;
    a.id = id;
    a.params = thermal::sample_parameters(agent_seed(sc.seed, id), sc.params);
    a.model = thermal::discretize_zoh(thermal::build_continuous_model(a.params), sc.ts_minutes);
    const double sp = sc.matched_setpoints ? sc.base_setpoint_f : sc.setpoints_f[static_cast<std::size_t>(id)];
    a.gains = thermal::design_controller(a.model, sc.poles, sp);
    st.agents.push_back(std::move(a));
  }

  if (sc.matched_setpoints) {
    // The equilibrium input is affine in the setpoint, so one secant gives
    // the setpoint whose demand equals the agent's share.
    double r0 = 0.0;
    if (sc.nominal_schedule)
      for (const auto& a : st.agents) r0 += std::fabs(equilibrium_input(a, sc.base_setpoint_f, w0));
    else
      r0 = sc.power_schedule.front();
    const auto shares = solve_initial(sc, r0).centroids;
    sc.setpoints_f.clear();
    for (auto& a : st.agents) {
      const double u0 = equilibrium_input(a, sc.base_setpoint_f, w0);
      const double slope = equilibrium_input(a, sc.base_setpoint_f + 1.0, w0) - u0;
      const double target = u0 >= 0.0 ? shares[static_cast<std::size_t>(a.id)] : -shares[static_cast<std::size_t>(a.id)];
      a.gains.setpoint_f = sc.base_setpoint_f + (target - u0) / slope;
      sc.setpoints_f.push_back(a.gains.setpoint_f);
    }
  }
  if (sc.nominal_schedule) sc.power_schedule = nominal_demand(sc, st.agents, st.disturbance);
  sc.nominal_schedule = false;
  sc.matched_setpoints = false;
  sc.validate();

  const double r0 = sc.power_schedule.front();
  st.initial = solve_initial(sc, r0);

  // The one-step update shifts every resource by (r(k) - r(0))/N; all of them
  // must stay inside the domain for the whole schedule.
  const auto [zmin, zmax] = std::minmax_element(st.initial.centroids.begin(), st.initial.centroids.end());
  for (std::size_t k = 0; k < sc.power_schedule.size(); ++k) {
    const double shift = (sc.power_schedule[k] - r0) / n;
    if (*zmin + shift < sc.domain.a || *zmax + shift > sc.domain.b)
      bad(fmt::format("at step {} the one-step update moves resources to [{:.6g}, {:.6g}], outside [{}, {}]", k,
                      *zmin + shift, *zmax + shift, sc.domain.a, sc.domain.b));
  }

  std::map<AgentId, double> resources;
  for (auto& a : st.agents) {
    a.x = equilibrium(a, a.gains.setpoint_f, w0);
    st.initial_states.push_back(a.x);
    resources[a.id] = st.initial.centroids[static_cast<std::size_t>(a.id)];
  }
  st.alloc = AllocationState::make(std::move(resources), r0, st.initial.v_k, sc.sigma2, 0);
  st.trace.n_agents = n;
  for (const auto& c : sc.setpoint_changes)
    if (!st.trace.perturbation_step || c.step < *st.trace.perturbation_step) st.trace.perturbation_step = c.step;
  return st;
}

void step(SimState& st) {
  const Scenario& sc = st.scenario;
  const int k = st.next_step;
  if (k >= sc.horizon) throw Error(ErrorKind::InvalidArgument, fmt::format("step {} is past the horizon", k));
  const double r_k = sc.power_schedule[static_cast<std::size_t>(k)];

  st.alloc = advance(st.alloc, r_k);
  st.alloc.step = k;

  for (const auto& c : sc.setpoint_changes) {
    if (c.step != k) continue;
    for (auto& a : st.agents)
      if (!c.agent || *c.agent == a.id)
        a.gains.setpoint_f = c.relative ? sc.setpoints_f[static_cast<std::size_t>(a.id)] + c.value : c.value;
  }

  std::vector<double> u(st.agents.size());
  std::map<AgentId, double> wanted;
  for (std::size_t i = 0; i < st.agents.size(); ++i) {
    u[i] = thermal::desired_power(st.agents[i].gains, st.agents[i].x);
    wanted[st.agents[i].id] = std::fabs(u[i]);
  }

  auto neg = negotiate(st.alloc, wanted, sc.rounds_per_step);
  st.alloc = std::move(neg.state);
  std::map<AgentId, int> swap_count;
  for (const auto& s : neg.swaps) {
    ++swap_count[s.proposer];
    ++swap_count[s.target];
  }

  const double t = k * sc.ts_minutes;
  const auto dist = st.disturbance.at(t);
  const Eigen::Vector2d w = st.disturbance.w(t);
  std::vector<double> magnitudes;
  for (std::size_t i = 0; i < st.agents.size(); ++i) {
    auto& a = st.agents[i];
    const double z = st.alloc.resource(a.id);
    const double applied = u[i] >= 0.0 ? z : -z;
    const auto next = thermal::step_plant(a.x, applied, w, a.model);
    a.x = next.x;
    magnitudes.push_back(std::fabs(applied));
    st.trace.rows.push_back({k, a.id, z, u[i], applied, thermal::c_to_f(next.y_c), a.gains.setpoint_f,
                             swap_count.contains(a.id) ? swap_count[a.id] : 0});
  }

  StepRow row;
  row.step = k;
  row.time_min = t;
  row.r = r_k;
  row.mu = st.alloc.mu_current;
  row.sum_z = st.alloc.total();
  row.sum_abs_applied = kernels::sum(magnitudes);
  row.constraint_error = std::fabs(row.sum_z - r_k);
  row.outdoor_f = dist.outdoor_f;
  row.solar_w = dist.solar_w;
  row.swaps = static_cast<int>(neg.swaps.size());
  st.trace.steps.push_back(row);
  st.trace.swaps.insert(st.trace.swaps.end(), neg.swaps.begin(), neg.swaps.end());
  st.trace.orders.push_back(st.alloc.comm_graph.order);
  ++st.next_step;
}

TraceLog run(const Scenario& sc) {
  SimState st = initialize(sc);
  while (st.next_step < st.scenario.horizon) step(st);
  return std::move(st.trace);
}

MetricsReport metrics(const TraceLog& t) {
  if (t.steps.empty()) throw Error(ErrorKind::InvalidArgument, "metrics need a nonempty trace");
  const auto n = static_cast<std::size_t>(t.n_agents);
  MetricsReport m;
  double sq = 0.0;
  for (const auto& s : t.steps) {
    sq += (s.sum_abs_applied - s.r) * (s.sum_abs_applied - s.r);
    m.max_constraint_error = std::max(m.max_constraint_error, s.constraint_error);
  }
  m.l2_power_error = std::sqrt(sq);

  m.swaps_per_agent.assign(n, 0);
  for (const auto& s : t.swaps) {
    ++m.swaps_per_agent[static_cast<std::size_t>(s.proposer)];
    ++m.swaps_per_agent[static_cast<std::size_t>(s.target)];
  }
  m.total_swaps = static_cast<int>(t.swaps.size());
  m.mean_swaps_per_agent = n ? 2.0 * m.total_swaps / static_cast<double>(n) : 0.0;

  std::vector<std::set<AgentId>> met(n);
  for (const auto& order : t.orders)
    for (std::size_t i = 0; i + 1 < order.size(); ++i) {
      met[static_cast<std::size_t>(order[i])].insert(order[i + 1]);
      met[static_cast<std::size_t>(order[i + 1])].insert(order[i]);
    }
  for (const auto& s : met) m.neighbor_coverage.push_back(static_cast<int>(s.size()));
  if (n) {
    double total = 0.0;
    for (int c : m.neighbor_coverage) total += c;
    m.mean_neighbor_coverage = total / static_cast<double>(n);
  }

  std::vector<double> per(n, 0.0);
  std::vector<int> cnt(n, 0);
  double all = 0.0;
  for (const auto& r : t.rows) {
    const double e = r.temp_f - r.setpoint_f;
    per[static_cast<std::size_t>(r.agent)] += e * e;
    ++cnt[static_cast<std::size_t>(r.agent)];
    all += e * e;
  }
  for (std::size_t i = 0; i < n; ++i)
    m.temperature_rms_per_agent_f.push_back(cnt[i] ? std::sqrt(per[i] / cnt[i]) : 0.0);
  m.temperature_rms_f = t.rows.empty() ? 0.0 : std::sqrt(all / static_cast<double>(t.rows.size()));

  m.perturbation_step = t.perturbation_step;
  const int horizon = static_cast<int>(t.steps.size());
  const int p = t.perturbation_step ? std::clamp(*t.perturbation_step, 0, horizon) : horizon;
  int before = 0, after = 0;
  for (const auto& s : t.steps) (s.step < p ? before : after) += s.swaps;
  m.swap_rate_before = p > 0 ? static_cast<double>(before) / p : 0.0;
  m.swap_rate_after = horizon > p ? static_cast<double>(after) / (horizon - p) : 0.0;
  return m;
}

json metrics_to_json(const MetricsReport& m) {
  json j;
  j["l2_power_error"] = m.l2_power_error;
  j["max_constraint_error"] = m.max_constraint_error;
  j["total_swaps"] = m.total_swaps;
  j["mean_swaps_per_agent"] = m.mean_swaps_per_agent;
  j["swaps_per_agent"] = m.swaps_per_agent;
  j["neighbor_coverage"] = m.neighbor_coverage;
  j["mean_neighbor_coverage"] = m.mean_neighbor_coverage;
  j["temperature_rms_f"] = m.temperature_rms_f;
  j["temperature_rms_per_agent_f"] = m.temperature_rms_per_agent_f;
  j["perturbation_step"] = m.perturbation_step ? json(*m.perturbation_step) : json(nullptr);
  j["swap_rate_before"] = m.swap_rate_before;
  j["swap_rate_after"] = m.swap_rate_after;
  return j;
}

void write_trace_csv(const TraceLog& t, std::ostream& os) {
  os << "step,time_min,agent,z,u_desired,applied_power,temp_F,setpoint_F,swaps,r,sum_z,constraint_error\n";
  for (const auto& r : t.rows) {
    const auto& s = t.steps[static_cast<std::size_t>(r.step)];
    fmt::print(os, "{},{},{},{},{},{},{},{},{},{},{},{}\n", r.step, cell(s.time_min), r.agent, cell(r.z),
               cell(r.u_desired), cell(r.applied), cell(r.temp_f), cell(r.setpoint_f), r.swaps, cell(s.r),
               cell(s.sum_z), cell(s.constraint_error));
  }
}

void write_swaps_csv(const TraceLog& t, std::ostream& os) {
  os << "step,proposer,target,z_proposer_before,z_target_before\n";
  for (const auto& s : t.swaps)
    fmt::print(os, "{},{},{},{},{}\n", s.step, s.proposer, s.target, cell(s.z_proposer_before), cell(s.z_target_before));
}

void write_outputs(const TraceLog& t, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto open = [&](const char* name) {
    std::ofstream f(dir / name);
    if (!f) throw Error(ErrorKind::InvalidArgument, fmt::format("cannot write {}", (dir / name).string()));
    return f;
  };
  {
    auto f = open("trace.csv");
    write_trace_csv(t, f);
  }
  {
    auto f = open("swaps.csv");
    write_swaps_csv(t, f);
  }
  {
    auto f = open("metrics.json");
    f << metrics_to_json(metrics(t)).dump(2) << '\n';
  }
  const auto n = static_cast<std::size_t>(t.n_agents);
  const auto header = [&](std::ostream& os, const char* lead, const char* prefix) {
    os << lead;
    for (std::size_t i = 0; i < n; ++i) fmt::print(os, ",{}{}", prefix, i);
  };
  {
    auto f = open("powers.csv");
    header(f, "step,time_min", "agent_");
    f << '\n';
    for (const auto& s : t.steps) {
      fmt::print(f, "{},{}", s.step, cell(s.time_min));
      for (std::size_t i = 0; i < n; ++i) f << ',' << cell(t.rows[static_cast<std::size_t>(s.step) * n + i].applied);
      f << '\n';
    }
  }
  {
    auto f = open("total_vs_available.csv");
    f << "step,time_min,r,sum_abs_applied,sum_z,constraint_error\n";
    for (const auto& s : t.steps)
      fmt::print(f, "{},{},{},{},{},{}\n", s.step, cell(s.time_min), cell(s.r), cell(s.sum_abs_applied), cell(s.sum_z),
                 cell(s.constraint_error));
  }
  {
    auto f = open("temperatures.csv");
    header(f, "step,time_min,outdoor_F,solar_W", "temp_F_agent_");
    for (std::size_t i = 0; i < n; ++i) fmt::print(f, ",setpoint_F_agent_{}", i);
    f << '\n';
    for (const auto& s : t.steps) {
      fmt::print(f, "{},{},{},{}", s.step, cell(s.time_min), cell(s.outdoor_f), cell(s.solar_w));
      const std::size_t base = static_cast<std::size_t>(s.step) * n;
      for (std::size_t i = 0; i < n; ++i) f << ',' << cell(t.rows[base + i].temp_f);
      for (std::size_t i = 0; i < n; ++i) f << ',' << cell(t.rows[base + i].setpoint_f);
      f << '\n';
    }
  }
}

double replay_temperature_error(const SimState& st) {
  const auto n = st.agents.size();
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::Vector3d x = st.initial_states[i];
    for (const auto& s : st.trace.steps) {
      const auto& row = st.trace.rows[static_cast<std::size_t>(s.step) * n + i];
      const auto next = thermal::step_plant(x, row.applied, st.disturbance.w(s.time_min), st.agents[i].model);
      x = next.x;
      worst = std::max(worst, std::fabs(thermal::c_to_f(next.y_c) - row.temp_f));
    }
  }
  return worst;
}

}  // namespace cvtalloc::sim
