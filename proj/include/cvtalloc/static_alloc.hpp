#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cvtalloc/density.hpp"
#include "cvtalloc/tessellation.hpp"

namespace cvtalloc {

/// Constraint row of the allocation system: returns g(z), solved for g(z) = 0.
using ConstraintFn = std::function<double(std::span<const double>)>;

/// Allocate r among N agents so that the allocations are the centroids of a
/// CVT under a density whose single free parameter absorbs the constraint.
struct StaticProblem {
  Domain1D domain;
  std::size_t n_agents = 1;
  DensitySpec density = DensitySpec::uniform(0.0, 1.0);
  double r = 0.0;
  /// Optional replacement for the sum row; defaults to sum(z) - r.
  ConstraintFn constraint;

  /// Validates the invariants: N >= 1, exactly one free parameter
  /// (NoFreeParameter otherwise), r/N strictly inside the domain
  /// (InfeasibleProblem otherwise).
  static StaticProblem make(Domain1D dom, std::size_t n, DensitySpec density, double r);

  double constraint_value(std::span<const double> z) const;
};

/// Residual of the N+1 system at unknowns (z_1..z_N, v): rows 1..N are
/// z_i - centroid(V_i(z); v), row N+1 is the constraint. Throws
/// InvalidCandidate when z is not a valid generator set, v is outside the
/// family's domain, or a cell is empty.
std::vector<double> residual(std::span<const double> unknowns, const StaticProblem& p);

/// Generators at the (i - 1/2)/N quantiles of d^(1/3) restricted to dom, the
/// asymptotic CVT point density. Falls back to uniform_init when d has no
/// usable mass on dom.
std::vector<double> point_density_init(const DensitySpec& d, Domain1D dom, std::size_t n);

/// Moment-matching guess for the free parameter, with centroids at the
/// (i - 1/2)/N quantiles of rho^(1/3) restricted to the domain (falls back to
/// equally spaced points when that density has no mass there).
std::vector<double> default_initial_guess(const StaticProblem& p);

struct SolveOptions {
  double tol = 1e-9;        // on the residual 2-norm
  int max_iter = 200;
  double fd_step = 1e-7;    // relative forward-difference step
  double armijo = 1e-4;
  int max_backtracks = 60;
};

struct StaticSolution {
  std::vector<double> centroids;
  double v_k = 0.0;
  double residual_norm = 0.0;
  double sum = 0.0;
  Tessellation tessellation;
  bool converged = false;
  int iterations = 0;
  std::string diagnostic;  // why the solver stopped when not converged
};

/// Damped Newton on residual() with a forward-difference Jacobian and Armijo
/// backtracking. A non-converged result carries the best iterate and a
/// diagnostic (the SolverDiverged outcome). Throws InfeasibleProblem for
/// problems that fail StaticProblem's invariants.
StaticSolution solve(const StaticProblem& p,
                     std::optional<std::span<const double>> init = std::nullopt,
                     const SolveOptions& opts = {});

struct CrossValidationReport {
  double max_discrepancy = 0.0;  // max_i |z_i(solve) - z_i(lloyd)|
  double threshold = 0.0;        // 1e-6 * (b - a)
  double snle_sum = 0.0;
  double lloyd_sum = 0.0;
  double r = 0.0;
  bool lloyd_converged = false;
  int lloyd_iterations = 0;
  std::vector<double> lloyd_generators;
  bool pass = false;
};

/// Lloyd settings used by cross_validate: tolerance 1e-14 * (b - a) and 200k
/// iterations. Lloyd contracts slowly for N ~ 50, so the looser default
/// tolerance leaves the generator sum visibly short of r.
LloydOptions cross_validation_lloyd_options();

/// Runs Lloyd from point_density_init with the density bound at the solved
/// parameter and compares against the solved centroids. Equally spaced starts
/// leave empty cells when the bound density has compact support.
CrossValidationReport cross_validate(const StaticSolution& sol, const StaticProblem& p,
                                     const LloydOptions& lloyd_opts = cross_validation_lloyd_options());

}  // namespace cvtalloc
