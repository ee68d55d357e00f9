#include "cvtalloc/dynamic_alloc.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "cvtalloc/errors.hpp"
#include "cvtalloc/kernels.hpp"
#include "cvtalloc/static_alloc.hpp"

namespace cvtalloc {

std::vector<AgentId> LineGraph::neighbors(AgentId id) const {
  const auto pos = position(id);
  if (!pos) throw Error(ErrorKind::UnknownAgent, fmt::format("agent {} is not in the graph", id));
  std::vector<AgentId> out;
  if (*pos > 0) out.push_back(order[*pos - 1]);
  if (*pos + 1 < order.size()) out.push_back(order[*pos + 1]);
  return out;
}

std::optional<std::size_t> LineGraph::position(AgentId id) const {
  const auto it = std::find(order.begin(), order.end(), id);
  if (it == order.end()) return std::nullopt;
  return static_cast<std::size_t>(it - order.begin());
}

LineGraph rebuild_line_graph(const std::map<AgentId, double>& resources) {
  std::vector<std::pair<double, AgentId>> keyed;
  keyed.reserve(resources.size());
  for (const auto& [id, z] : resources) keyed.emplace_back(z, id);
  std::sort(keyed.begin(), keyed.end());
  LineGraph g;
  g.order.reserve(keyed.size());
  for (const auto& [z, id] : keyed) g.order.push_back(id);
  for (std::size_t i = 0; i + 1 < g.order.size(); ++i) g.edges.emplace_back(g.order[i], g.order[i + 1]);
  return g;
}

bool is_valid_line_graph(const LineGraph& g, const std::map<AgentId, double>& resources) {
  if (g.order.size() != resources.size()) return false;
  if (g.edges.size() != (g.order.empty() ? 0 : g.order.size() - 1)) return false;
  std::set<AgentId> seen;
  for (std::size_t i = 0; i < g.order.size(); ++i) {
    const auto it = resources.find(g.order[i]);
    if (it == resources.end() || !seen.insert(g.order[i]).second) return false;
    if (i == 0) continue;
    const double prev = resources.at(g.order[i - 1]);
    if (prev > it->second || (prev == it->second && g.order[i - 1] > g.order[i])) return false;
    if (g.edges[i - 1] != std::pair{g.order[i - 1], g.order[i]}) return false;
  }
  return true;
}

AllocationState AllocationState::make(std::map<AgentId, double> resources, double r, double mu,
                                      double sigma2, int step) {
  if (resources.empty()) throw Error(ErrorKind::InvalidArgument, "allocation state needs at least one agent");
  AllocationState st;
  st.resources = std::move(resources);
  st.r_current = r;
  st.mu_current = mu;
  st.sigma2 = sigma2;
  st.step = step;
  const double n = static_cast<double>(st.resources.size());
  if (!(std::fabs(st.total() - r) < 1e-9 * n))
    throw Error(ErrorKind::InvalidArgument,
                fmt::format("resources sum to {:.15g}, expected r = {:.15g}", st.total(), r));
  st.comm_graph = rebuild_line_graph(st.resources);
  return st;
}

double AllocationState::resource(AgentId id) const {
  const auto it = resources.find(id);
  if (it == resources.end()) throw Error(ErrorKind::UnknownAgent, fmt::format("agent {} is not in the state", id));
  return it->second;
}

double AllocationState::total() const {
  std::vector<double> z;
  z.reserve(resources.size());
  for (const auto& kv : resources) z.push_back(kv.second);
  return kernels::sum(z);
}

std::vector<double> one_step_update(std::span<const double> z, double r_k, double r_k1) {
  std::vector<double> out(z.begin(), z.end());
  if (!out.empty()) kernels::add_scalar(out, (r_k1 - r_k) / static_cast<double>(out.size()));
  return out;
}

double shifted_mean(double mu_k, double r_k, double r_k1, int n) {
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "shifted_mean needs n >= 1");
  return mu_k + (r_k1 - r_k) / static_cast<double>(n);
}

AllocationState advance(const AllocationState& st, double r_next) {
  AllocationState out = st;
  const double delta = (r_next - st.r_current) / static_cast<double>(st.resources.size());
  for (auto& kv : out.resources) kv.second += delta;
  out.mu_current = shifted_mean(st.mu_current, st.r_current, r_next, static_cast<int>(st.resources.size()));
  out.r_current = r_next;
  return out;
}

double gaussian_mass_outside(Domain1D dom, double mu, double sigma2) {
  const auto g = DensitySpec::gaussian(mu, sigma2);
  const double inf = std::numeric_limits<double>::infinity();
  return mass(g, {-inf, dom.a}) + mass(g, {dom.b, inf});
}

bool shift_guard_holds(Domain1D dom, double mu, double sigma2, double delta) {
  constexpr double kTailMass = 1e-9;
  return gaussian_mass_outside(dom, mu, sigma2) < kTailMass &&
         gaussian_mass_outside(dom, mu - delta, sigma2) < kTailMass;
}

ShiftReport verify_shift_property(const DensitySpec& d, Domain1D dom, int n, double delta, double tol) {
  if (d.family() != Family::Gaussian || !d.is_bound())
    throw Error(ErrorKind::InvalidArgument, "verify_shift_property needs a bound gaussian density");
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "verify_shift_property needs n >= 1");
  const double mu = d.param("mu");
  const double s2 = d.param("sigma2");
  if (!shift_guard_holds(dom, mu, s2, delta))
    throw Error(ErrorKind::DomainTooNarrow,
                fmt::format("gaussian mass outside [{}, {}] is not negligible for mu = {:.15g} or mu - delta = {:.15g}",
                            dom.a, dom.b, mu, mu - delta));

  LloydOptions opts;
  opts.tol = 1e-13 * dom.width();
  opts.max_iter = 200'000;
  const auto run = [&](const DensitySpec& g) {
    return lloyd(point_density_init(g, dom, static_cast<std::size_t>(n)), g, dom, opts).tessellation.generators;
  };
  ShiftReport rep;
  rep.tol = tol;
  rep.before = run(d);
  rep.after = run(DensitySpec::gaussian(mu - delta, s2));
  auto expected = rep.before;
  kernels::add_scalar(expected, -delta);
  rep.max_deviation = kernels::max_abs_diff(rep.after, expected);
  rep.pass = rep.max_deviation < tol;
  return rep;
}

AgentId neighbor_of_interest(AgentId i, double u_i, const AllocationState& st) {
  AgentId best = i;
  double best_dist = std::fabs(u_i - st.resource(i));
  for (AgentId j : st.comm_graph.neighbors(i)) {
    const double dist = std::fabs(u_i - st.resource(j));
    if (dist < best_dist || (dist == best_dist && best != i && j < best)) {
      best = j;
      best_dist = dist;
    }
  }
  return best;
}

NegotiationResult negotiate_round(const AllocationState& st, const std::map<AgentId, double>& desired) {
  for (const auto& kv : st.resources)
    if (!desired.contains(kv.first))
      throw Error(ErrorKind::MissingDesiredInput, fmt::format("no desired input for agent {}", kv.first));

  NegotiationResult res{st, {}};
  std::set<AgentId> taken;
  for (AgentId i : st.comm_graph.order) {
    if (taken.contains(i)) continue;
    const AgentId j = neighbor_of_interest(i, desired.at(i), st);
    if (j == i || taken.contains(j)) continue;
    // Untaken agents still hold their pre-round values, so st is the "before".
    const double zi = st.resource(i);
    const double zj = st.resource(j);
    res.state.resources[i] = zj;
    res.state.resources[j] = zi;
    res.swaps.push_back({st.step, i, j, zi, zj});
    taken.insert(i);
    taken.insert(j);
  }
  res.state.comm_graph = rebuild_line_graph(res.state.resources);
  return res;
}

NegotiationResult negotiate(const AllocationState& st, const std::map<AgentId, double>& desired, int rounds) {
  NegotiationResult res{st, {}};
  for (int k = 0; k < rounds; ++k) {
    auto next = negotiate_round(res.state, desired);
    res.state = std::move(next.state);
    res.swaps.insert(res.swaps.end(), next.swaps.begin(), next.swaps.end());
  }
  return res;
}

}  // namespace cvtalloc
