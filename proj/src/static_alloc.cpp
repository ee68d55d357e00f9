#include "cvtalloc/static_alloc.hpp"

#include <fmt/format.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "cvtalloc/errors.hpp"
#include "cvtalloc/kernels.hpp"

namespace cvtalloc {
namespace {

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

// Residual, or nullopt when the candidate is rejected.
std::optional<std::vector<double>> try_residual(std::span<const double> x, const StaticProblem& p) {
  try {
    return residual(x, p);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::InvalidCandidate) return std::nullopt;
    throw;
  }
}

// Density proportional to d^(1/3): the asymptotic point density of an optimal
// 1-D quantizer, so its quantiles sit close to the CVT generators.
DensitySpec cube_root_density(const DensitySpec& d) {
  switch (d.family()) {
    case Family::Uniform: return d;
    case Family::Gaussian: return DensitySpec::gaussian(d.param("mu"), 3.0 * d.param("sigma2"));
    case Family::Exponential: return DensitySpec::exponential(d.param("lambda") / 3.0);
    case Family::Gamma:
      return DensitySpec::gamma((d.param("k") - 1.0) / 3.0 + 1.0, 3.0 * d.param("theta"));
  }
  return d;
}

// Quantiles (i - 1/2)/N of q restricted to dom; nullopt if q has no usable mass there.
std::optional<std::vector<double>> restricted_quantiles(const DensitySpec& q, Domain1D dom, std::size_t n) {
  const double total = mass(q, dom.interval());
  if (!(total > 1e-12)) return std::nullopt;
  std::vector<double> z(n);
  double lo = dom.a;
  for (std::size_t i = 0; i < n; ++i) {
    const double target = (static_cast<double>(i) + 0.5) / static_cast<double>(n) * total;
    double a = lo;
    double b = dom.b;
    for (int k = 0; k < 200 && b - a > 1e-13 * dom.width(); ++k) {
      const double m = 0.5 * (a + b);
      if (mass(q, {dom.a, m}) < target)
        a = m;
      else
        b = m;
    }
    z[i] = 0.5 * (a + b);
    lo = z[i];
  }
  try {
    validate_generators(z, dom);
  } catch (const Error&) {
    return std::nullopt;
  }
  return z;
}

}  // namespace

std::vector<double> point_density_init(const DensitySpec& d, Domain1D dom, std::size_t n) {
  try {
    if (auto q = restricted_quantiles(cube_root_density(d), dom, n)) return std::move(*q);
  } catch (const Error&) {
  }
  return uniform_init(n, dom);
}

StaticProblem StaticProblem::make(Domain1D dom, std::size_t n, DensitySpec density, double r) {
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "static allocation needs at least one agent");
  if (!density.free_parameter())
    throw Error(ErrorKind::NoFreeParameter,
                fmt::format("{} must declare one free parameter", density.describe()));
  const double mean = r / static_cast<double>(n);
  if (!std::isfinite(r) || !(mean > dom.a && mean < dom.b))
    throw Error(ErrorKind::InfeasibleProblem,
                fmt::format("mean allocation r/N = {:.15g} is not inside ({}, {})", mean, dom.a, dom.b));
  StaticProblem p;
  p.domain = dom;
  p.n_agents = n;
  p.density = std::move(density);
  p.r = r;
  return p;
}

double StaticProblem::constraint_value(std::span<const double> z) const {
  if (constraint) return constraint(z);
  return kernels::sum(z) - r;
}

std::vector<double> residual(std::span<const double> x, const StaticProblem& p) {
  const std::size_t n = p.n_agents;
  if (x.size() != n + 1)
    throw Error(ErrorKind::InvalidArgument, fmt::format("expected {} unknowns, got {}", n + 1, x.size()));
  const auto z = x.first(n);
  Tessellation t;
  DensitySpec bound = p.density;
  try {
    t = voronoi_regions(z, p.domain);
    bound = bind_free_parameter(p.density, x[n]);
  } catch (const Error& e) {
    throw Error(ErrorKind::InvalidCandidate, e.what());
  }
  std::vector<double> f(n + 1);
  try {
    for (std::size_t i = 0; i < n; ++i) f[i] = z[i] - centroid(bound, t.cell(i));
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::EmptyCell) throw;
    throw Error(ErrorKind::InvalidCandidate, e.what());
  }
  f[n] = p.constraint_value(z);
  return f;
}

std::vector<double> default_initial_guess(const StaticProblem& p) {
  const std::size_t n = p.n_agents;
  const double mean = p.r / static_cast<double>(n);
  const auto& d = p.density;
  const std::string_view free = *d.free_parameter();
  double v = 1.0;
  switch (d.family()) {
    case Family::Gaussian:
      v = free == "mu" ? mean : std::pow(p.domain.width() / 6.0, 2);
      break;
    case Family::Exponential:
      v = mean > 0.0 ? 1.0 / mean : 1.0 / p.domain.width();
      break;
    case Family::Gamma:
      if (free == "k")
        v = mean > 0.0 ? mean / d.param("theta") : 1.0;
      else
        v = mean > 0.0 ? mean / d.param("k") : 1.0;
      break;
    case Family::Uniform:
      // Centroids of a uniform CVT average to the support midpoint.
      v = free == "b" ? 2.0 * mean - d.param("a") : 2.0 * mean - d.param("b");
      break;
  }
  std::vector<double> x;
  try {
    x = point_density_init(bind_free_parameter(d, v), p.domain, n);
  } catch (const Error&) {
    x = uniform_init(n, p.domain);
  }
  x.push_back(v);
  return x;
}

StaticSolution solve(const StaticProblem& p, std::optional<std::span<const double>> init,
                     const SolveOptions& opts) {
  const std::size_t n = p.n_agents;
  const std::size_t dim = n + 1;
  const double mean = p.r / static_cast<double>(n);
  if (!(mean > p.domain.a && mean < p.domain.b))
    throw Error(ErrorKind::InfeasibleProblem,
                fmt::format("mean allocation r/N = {:.15g} is not inside ({}, {})", mean, p.domain.a, p.domain.b));

  std::vector<double> x = init ? std::vector<double>(init->begin(), init->end()) : default_initial_guess(p);
  if (x.size() != dim)
    throw Error(ErrorKind::InvalidArgument, fmt::format("initial guess needs {} values", dim));
  auto f0 = try_residual(x, p);
  if (!f0) throw Error(ErrorKind::InvalidCandidate, "initial guess is not a valid candidate");
  std::vector<double> f = std::move(*f0);
  double fnorm = norm2(f);

  StaticSolution sol;
  const double z_scale = 1e-3 * p.domain.width();
  Eigen::MatrixXd jac(dim, dim);
  Eigen::VectorXd rhs(dim);
  std::vector<double> xt(dim);

  int it = 0;
  for (; it < opts.max_iter && !(fnorm < opts.tol); ++it) {
    // Forward differences; fall back to a backward step if the forward
    // candidate leaves the admissible set.
    for (std::size_t j = 0; j < dim; ++j) {
      const double scale = j < n ? std::max(std::fabs(x[j]), z_scale) : std::max(std::fabs(x[j]), 1e-12);
      double h = opts.fd_step * scale;
      xt = x;
      xt[j] = x[j] + h;
      auto fj = try_residual(xt, p);
      if (!fj) {
        h = -h;
        xt[j] = x[j] + h;
        fj = try_residual(xt, p);
      }
      if (!fj) {
        sol.diagnostic = fmt::format("finite-difference probe rejected on unknown {}", j);
        break;
      }
      for (std::size_t i = 0; i < dim; ++i) jac(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = ((*fj)[i] - f[i]) / h;
    }
    if (!sol.diagnostic.empty()) break;

    for (std::size_t i = 0; i < dim; ++i) rhs(static_cast<Eigen::Index>(i)) = -f[i];
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(jac);
    if (lu.rank() < static_cast<Eigen::Index>(dim)) {
      sol.diagnostic = fmt::format("singular Jacobian at iteration {}", it);
      break;
    }
    const Eigen::VectorXd dx = lu.solve(rhs);

    double alpha = 1.0;
    bool accepted = false;
    for (int bt = 0; bt < opts.max_backtracks; ++bt, alpha *= 0.5) {
      for (std::size_t i = 0; i < dim; ++i) xt[i] = x[i] + alpha * dx(static_cast<Eigen::Index>(i));
      auto ft = try_residual(xt, p);
      if (!ft) continue;
      const double tn = norm2(*ft);
      if (tn <= (1.0 - opts.armijo * alpha) * fnorm) {
        x = xt;
        f = std::move(*ft);
        fnorm = tn;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      sol.diagnostic = fmt::format("line search failed at iteration {} (residual {:.3g})", it, fnorm);
      break;
    }
  }

  sol.iterations = it;
  sol.centroids.assign(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(n));
  sol.v_k = x[n];
  sol.residual_norm = fnorm;
  sol.sum = kernels::sum(sol.centroids);
  sol.converged = fnorm < opts.tol;
  if (!sol.converged && sol.diagnostic.empty())
    sol.diagnostic = fmt::format("no convergence in {} iterations (residual {:.3g})", opts.max_iter, fnorm);
  sol.tessellation = voronoi_regions(sol.centroids, p.domain, bind_free_parameter(p.density, sol.v_k));
  return sol;
}

LloydOptions cross_validation_lloyd_options() {
  LloydOptions o;
  o.max_iter = 200'000;
  o.tol = 0.0;  // resolved per problem: 1e-14 * (b - a)
  return o;
}

CrossValidationReport cross_validate(const StaticSolution& sol, const StaticProblem& p,
                                     const LloydOptions& lloyd_opts) {
  CrossValidationReport rep;
  rep.r = p.r;
  rep.threshold = 1e-6 * p.domain.width();
  rep.snle_sum = kernels::sum(sol.centroids);
  const DensitySpec bound = bind_free_parameter(p.density, sol.v_k);
  LloydOptions opts = lloyd_opts;
  if (!opts.tol || *opts.tol <= 0.0) opts.tol = 1e-14 * p.domain.width();
  const auto res = lloyd(point_density_init(bound, p.domain, p.n_agents), bound, p.domain, opts);
  rep.lloyd_converged = res.converged;
  rep.lloyd_iterations = res.iterations;
  rep.lloyd_generators = res.tessellation.generators;
  rep.lloyd_sum = kernels::sum(rep.lloyd_generators);
  rep.max_discrepancy = kernels::max_abs_diff(rep.lloyd_generators, sol.centroids);
  rep.pass = rep.max_discrepancy < rep.threshold && std::fabs(rep.snle_sum - p.r) < 1e-6 &&
             std::fabs(rep.lloyd_sum - p.r) < 1e-6;
  return rep;
}

}  // namespace cvtalloc
