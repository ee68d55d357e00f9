#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "cvtalloc/density.hpp"

namespace cvtalloc {

/// Bounded resource axis [a, b].
struct Domain1D {
  double a = 0.0;
  double b = 1.0;

  /// Throws InvalidDomain unless a < b and both are finite.
  static Domain1D make(double a, double b);

  double width() const { return b - a; }
  Interval interval() const { return {a, b}; }
};

struct Tessellation {
  Domain1D domain;
  std::vector<double> generators;  // strictly increasing, inside (a, b)
  std::vector<double> boundaries;  // a = m_0 < m_1 < ... < m_N = b
  std::optional<double> energy;    // K, filled when a density was supplied

  std::size_t size() const { return generators.size(); }
  Interval cell(std::size_t i) const { return {boundaries[i], boundaries[i + 1]}; }
};

/// Relative gap below which two generators count as duplicates.
inline constexpr double kDuplicateGap = 1e-12;

/// Throws UnsortedGenerators, DuplicateGenerators or GeneratorOutOfDomain.
void validate_generators(std::span<const double> generators, Domain1D dom);

/// Voronoi cells of sorted generators on dom: interior boundaries are the
/// midpoints of adjacent generators. Energy is left empty.
Tessellation voronoi_regions(std::span<const double> generators, Domain1D dom);

/// As above, with energy populated from energy_K under `d`.
Tessellation voronoi_regions(std::span<const double> generators, Domain1D dom,
                             const DensitySpec& d);

/// sum_i int_{cells_i} rho(x) (x - points_i)^2 dx for an arbitrary tiling.
/// Cells may be given in any order but must tile their union without overlap.
double energy_F(std::span<const double> points, std::span<const Interval> cells,
                const DensitySpec& d);

/// Quantization energy: energy_F over the Voronoi cells of `points`.
double energy_K(std::span<const double> points, const DensitySpec& d, Domain1D dom);

/// Centroids of the tessellation's cells (one Lloyd update, no energy).
std::vector<double> cell_centroids(const Tessellation& t, const DensitySpec& d);

/// One Lloyd iteration: generators move to the centroids of their cells.
Tessellation lloyd_step(const Tessellation& t, const DensitySpec& d);

struct LloydOptions {
  std::optional<double> tol;  // default 1e-10 * (b - a)
  int max_iter = 10'000;
  /// Called with the iteration index (0 = initial generators) and the generators.
  std::function<void(int, std::span<const double>)> observer;
};

struct LloydResult {
  Tessellation tessellation;
  bool converged = false;
  int iterations = 0;
  double displacement = 0.0;  // max-norm move of the final iteration
};

/// Lloyd's fixed-point iteration until the max-norm generator displacement
/// drops below tol. On hitting max_iter the last iterate is returned with
/// converged = false.
LloydResult lloyd(std::span<const double> init, const DensitySpec& d, Domain1D dom,
                  const LloydOptions& opts = {});

/// True iff every generator is within tol of the centroid of its Voronoi cell.
bool is_cvt(std::span<const double> points, const DensitySpec& d, Domain1D dom, double tol);

/// Largest |z_i - centroid(V_i)| over the Voronoi cells of `points`.
double centroid_deviation(std::span<const double> points, const DensitySpec& d, Domain1D dom);

/// N equally spaced points a + (i - 1/2)(b - a)/N.
std::vector<double> uniform_init(std::size_t n, Domain1D dom);

}  // namespace cvtalloc
