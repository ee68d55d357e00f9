#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cvtalloc/dynamic_alloc.hpp"
#include "cvtalloc/static_alloc.hpp"
#include "cvtalloc/thermal.hpp"

namespace cvtalloc::sim {

/// New setpoint for one agent (or every agent) from `step` onwards. A
/// relative change adds `value` to the agent's initial setpoint.
struct SetpointChange {
  int step = 0;
  std::optional<AgentId> agent;  // nullopt: all agents
  double value = 72.0;           // F
  bool relative = false;
};

struct Scenario {
  int n_agents = 15;
  int horizon = 144;
  double ts_minutes = 10.0;
  Domain1D domain{0.0, 3000.0};  // per-agent power range, W
  double sigma2 = 2500.0;        // Gaussian resource spread, W^2 (mean is solved)
  std::vector<double> power_schedule;  // r(k), W, one per step
  /// Replace power_schedule by the team's nominal demand: the sum over
  /// agents of |u_i(k)| when every plant runs its own controller unconstrained
  /// from equilibrium (a perfect day-ahead forecast).
  bool nominal_schedule = false;
  std::string disturbance = "synthetic";  // or a CSV path
  thermal::SyntheticWeather weather;
  std::vector<double> setpoints_f;  // one per agent
  /// Replace setpoints_f so that each agent's equilibrium demand at t = 0
  /// equals its initial CVT allocation, i.e. the team's needs follow the
  /// allocating Gaussian. Base demand is taken at base_setpoint_f.
  bool matched_setpoints = false;
  double base_setpoint_f = 72.0;
  std::vector<SetpointChange> setpoint_changes;
  std::uint64_t seed = 1;
  int rounds_per_step = 1;
  std::array<double, 3> poles = thermal::kDefaultPoles;
  thermal::ParamDistribution params;

  /// Throws InvalidScenario on a horizon/schedule mismatch, r(k)/N outside
  /// the domain, a negative domain, a setpoint list of the wrong length, or
  /// setpoint changes naming unknown agents or steps. Derived schedules and
  /// setpoints are checked after initialize() resolves them.
  void validate() const;
};

/// N = 15 agents, 144 steps of 10 minutes over a cold synthetic day, nominal
/// schedule, matched setpoints around 72 F, and at mid-run agents 1, 4, 7,
/// 10 and 13 have their setpoints moved 4 F up or down (alternating).
Scenario default_scenario();

/// Daily sinusoid N * (mean + amplitude * sin(2 pi k / period)).
std::vector<double> sinusoid_schedule(int n_agents, int horizon, double mean_per_agent,
                                      double amplitude_per_agent, double period_steps);

/// Scenario JSON (schema in docs/scenario.md). Missing fields keep the
/// defaults of default_scenario(); the schedule may be an array or a
/// {"sinusoid": {...}} object. Throws InvalidScenario.
Scenario scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const Scenario& sc);

/// Per-agent parameter seed derived from the scenario seed.
std::uint64_t agent_seed(std::uint64_t seed, AgentId id);

struct AgentRow {
  int step = 0;
  AgentId agent = 0;
  double z = 0.0;            // allocated magnitude after negotiation, W
  double u_desired = 0.0;    // signed controller output, W
  double applied = 0.0;      // sign(u) * z, W
  double temp_f = 0.0;       // indoor temperature after the step
  double setpoint_f = 0.0;
  int swaps = 0;             // swaps this agent took part in at this step
};

struct StepRow {
  int step = 0;
  double time_min = 0.0;
  double r = 0.0;
  double mu = 0.0;
  double sum_z = 0.0;
  double sum_abs_applied = 0.0;
  double constraint_error = 0.0;  // |sum_z - r|
  double outdoor_f = 0.0;
  double solar_w = 0.0;
  int swaps = 0;
};

struct TraceLog {
  int n_agents = 0;
  std::vector<AgentRow> rows;    // step-major, agents by id
  std::vector<StepRow> steps;
  std::vector<SwapEvent> swaps;
  std::vector<std::vector<AgentId>> orders;  // line-graph order after each step
  std::optional<int> perturbation_step;      // first setpoint change
};

struct Agent {
  AgentId id = 0;
  thermal::ThermalParams params;
  thermal::DiscreteModel model;
  thermal::ControllerGains gains;
  Eigen::Vector3d x = Eigen::Vector3d::Zero();
};

struct SimState {
  Scenario scenario;  // with derived schedule and setpoints filled in
  StaticSolution initial;
  AllocationState alloc;
  std::vector<Agent> agents;
  std::vector<Eigen::Vector3d> initial_states;
  thermal::Disturbance disturbance{{thermal::DisturbanceSample{}}};
  TraceLog trace;
  int next_step = 0;
};

/// Resolves derived schedules and setpoints, solves the static problem for
/// r(0) (Gaussian, free mean), gives agent i the i-th smallest centroid, samples and discretises every plant, and
/// starts each plant at its closed-loop equilibrium for the t = 0
/// disturbance. Throws SolverDiverged, InfeasibleProblem or InvalidScenario
/// (including when a one-step update would push a resource outside the
/// domain at some k).
SimState initialize(const Scenario& sc);

/// Advances one step: one-step update to r(k), setpoint changes due at k,
/// desired powers, negotiation on |u|, actuation with sign(u) * z, plant
/// step and trace rows.
void step(SimState& st);

TraceLog run(const Scenario& sc);

struct MetricsReport {
  double l2_power_error = 0.0;         // || sum_i |applied_i| - r ||_2 over steps
  double max_constraint_error = 0.0;   // max_k |sum z - r(k)|
  int total_swaps = 0;
  double mean_swaps_per_agent = 0.0;   // swap participations / N
  std::vector<int> swaps_per_agent;
  std::vector<int> neighbor_coverage;  // distinct agents ever adjacent
  double mean_neighbor_coverage = 0.0;
  double temperature_rms_f = 0.0;      // against the active setpoint
  std::vector<double> temperature_rms_per_agent_f;
  std::optional<int> perturbation_step;
  double swap_rate_before = 0.0;       // swaps per step
  double swap_rate_after = 0.0;
};

MetricsReport metrics(const TraceLog& t);
nlohmann::json metrics_to_json(const MetricsReport& m);

void write_trace_csv(const TraceLog& t, std::ostream& os);
void write_swaps_csv(const TraceLog& t, std::ostream& os);

/// trace.csv, swaps.csv, metrics.json, powers.csv, total_vs_available.csv and
/// temperatures.csv under dir.
void write_outputs(const TraceLog& t, const std::filesystem::path& dir);

/// Replays the logged powers through step_plant from the initial states and
/// returns the largest temperature mismatch (F).
double replay_temperature_error(const SimState& st);

}  // namespace cvtalloc::sim
