#pragma once

#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "cvtalloc/density.hpp"
#include "cvtalloc/tessellation.hpp"

namespace cvtalloc {

using AgentId = int;

/// Agents sorted by resource (ties by id); adjacent agents are neighbours.
/// The same graph serves as the resource graph and the communication graph.
struct LineGraph {
  std::vector<AgentId> order;
  std::vector<std::pair<AgentId, AgentId>> edges;  // (order[i], order[i+1])

  /// Up to two neighbours, lower-resource side first.
  std::vector<AgentId> neighbors(AgentId id) const;
  std::optional<std::size_t> position(AgentId id) const;

  friend bool operator==(const LineGraph&, const LineGraph&) = default;
};

LineGraph rebuild_line_graph(const std::map<AgentId, double>& resources);

/// True when g has N-1 edges joining consecutive entries of a permutation of
/// the agents in `resources`, sorted by (resource, id).
bool is_valid_line_graph(const LineGraph& g, const std::map<AgentId, double>& resources);

struct AllocationState {
  std::map<AgentId, double> resources;  // z_i(k)
  double r_current = 0.0;               // r(k)
  double mu_current = 0.0;              // mu(k)
  double sigma2 = 1.0;
  LineGraph comm_graph;
  int step = 0;

  /// Builds the graph and checks |sum z - r| < 1e-9 N (InvalidArgument).
  static AllocationState make(std::map<AgentId, double> resources, double r, double mu,
                              double sigma2, int step = 0);

  double resource(AgentId id) const;  // UnknownAgent if absent
  double total() const;
};

/// z_i + (r_k1 - r_k)/N for every i.
std::vector<double> one_step_update(std::span<const double> z, double r_k, double r_k1);

/// mu(k+1) = mu(k) + (r_k1 - r_k)/n.
double shifted_mean(double mu_k, double r_k, double r_k1, int n);

/// Applies the one-step update to every agent and moves r and mu to r_next.
/// The line graph is unchanged: a common shift preserves the order.
AllocationState advance(const AllocationState& st, double r_next);

/// Gaussian mass lying outside dom, for N(mu, sigma2).
double gaussian_mass_outside(Domain1D dom, double mu, double sigma2);

/// The shift lemma is exact only on an unbounded line. The guard accepts a
/// domain when the Gaussian mass outside it is below 1e-9 at both means.
bool shift_guard_holds(Domain1D dom, double mu, double sigma2, double delta);

struct ShiftReport {
  std::vector<double> before;   // CVT at mu
  std::vector<double> after;    // CVT at mu - delta
  double max_deviation = 0.0;   // max_i |after_i - (before_i - delta)|
  double tol = 0.0;
  bool pass = false;
};

/// Computes the CVT at mu and at mu - delta with Lloyd and checks that the
/// generators moved by exactly -delta. Throws DomainTooNarrow when the guard
/// fails and InvalidArgument unless d is a bound Gaussian.
ShiftReport verify_shift_property(const DensitySpec& d_gaussian, Domain1D dom, int n, double delta,
                                  double tol);

/// argmin over i and its neighbours of |u_i - z_j|; ties go to i, then to the
/// lower id.
AgentId neighbor_of_interest(AgentId i, double u_i, const AllocationState& st);

struct SwapEvent {
  int step = 0;
  AgentId proposer = 0;
  AgentId target = 0;
  double z_proposer_before = 0.0;
  double z_target_before = 0.0;
};

struct NegotiationResult {
  AllocationState state;
  std::vector<SwapEvent> swaps;
};

/// One round of the civility protocol. Agents are visited in ascending
/// resource order; each picks its neighbour of interest on the pre-round
/// state and swaps with it unless either side already swapped this round.
/// Throws MissingDesiredInput if an agent has no desired value.
NegotiationResult negotiate_round(const AllocationState& st,
                                  const std::map<AgentId, double>& desired);

/// `rounds` consecutive rounds with the same desired values.
NegotiationResult negotiate(const AllocationState& st, const std::map<AgentId, double>& desired,
                            int rounds);

}  // namespace cvtalloc
