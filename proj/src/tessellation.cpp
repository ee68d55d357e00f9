#include "cvtalloc/tessellation.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cvtalloc/errors.hpp"
#include "cvtalloc/kernels.hpp"

namespace cvtalloc {
namespace {

void fill_boundaries(std::span<const double> z, Domain1D dom, std::vector<double>& m) {
  m.resize(z.size() + 1);
  m.front() = dom.a;
  m.back() = dom.b;
  if (z.size() > 1) kernels::midpoints(z, std::span<double>(m.data() + 1, z.size() - 1));
}

void centroids_into(std::span<const double> boundaries, const DensitySpec& d,
                    std::span<double> out) {
  for (std::size_t i = 0; i + 1 < boundaries.size(); ++i)
    out[i] = centroid(d, {boundaries[i], boundaries[i + 1]});
}

}  // namespace

Domain1D Domain1D::make(double a, double b) {
  if (!std::isfinite(a) || !std::isfinite(b) || !(a < b))
    throw Error(ErrorKind::InvalidDomain, fmt::format("domain [{}, {}] must satisfy a < b, finite", a, b));
  return {a, b};
}

void validate_generators(std::span<const double> z, Domain1D dom) {
  if (z.empty()) throw Error(ErrorKind::InvalidArgument, "at least one generator is required");
  const double min_gap = kDuplicateGap * dom.width();
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (!(z[i] > dom.a && z[i] < dom.b))
      throw Error(ErrorKind::GeneratorOutOfDomain,
                  fmt::format("generator {} = {:.15g} not inside ({}, {})", i, z[i], dom.a, dom.b));
    if (i == 0) continue;
    if (z[i] < z[i - 1])
      throw Error(ErrorKind::UnsortedGenerators,
                  fmt::format("generator {} = {:.15g} is below its predecessor {:.15g}", i, z[i], z[i - 1]));
    if (z[i] - z[i - 1] < min_gap)
      throw Error(ErrorKind::DuplicateGenerators,
                  fmt::format("generators {} and {} are closer than {:.3g}", i - 1, i, min_gap));
  }
}

Tessellation voronoi_regions(std::span<const double> generators, Domain1D dom) {
  validate_generators(generators, dom);
  Tessellation t;
  t.domain = dom;
  t.generators.assign(generators.begin(), generators.end());
  fill_boundaries(generators, dom, t.boundaries);
  return t;
}

Tessellation voronoi_regions(std::span<const double> generators, Domain1D dom,
                             const DensitySpec& d) {
  Tessellation t = voronoi_regions(generators, dom);
  std::vector<double> per_cell(t.size());
  for (std::size_t i = 0; i < t.size(); ++i)
    per_cell[i] = local_moments(d, t.cell(i)).second_moment_about(t.generators[i]);
  t.energy = std::max(0.0, kernels::sum(per_cell));
  return t;
}

double energy_F(std::span<const double> points, std::span<const Interval> cells,
                const DensitySpec& d) {
  if (points.size() != cells.size())
    throw Error(ErrorKind::InvalidArgument,
                fmt::format("{} points but {} cells", points.size(), cells.size()));
  if (cells.empty()) return 0.0;
  std::vector<std::size_t> order(cells.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return cells[i].lo < cells[j].lo; });

  const double span = cells[order.back()].hi - cells[order.front()].lo;
  const double slack = 1e-12 * std::max(1.0, std::fabs(span));
  std::vector<double> per_cell(cells.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    const Interval c = cells[order[k]];
    if (!c.finite() || !(c.lo <= c.hi))
      throw Error(ErrorKind::CellsDoNotTile, fmt::format("cell [{}, {}] is not a finite interval", c.lo, c.hi));
    if (k > 0 && std::fabs(c.lo - cells[order[k - 1]].hi) > slack)
      throw Error(ErrorKind::CellsDoNotTile,
                  fmt::format("cell [{}, {}] does not abut its predecessor ending at {}", c.lo, c.hi,
                              cells[order[k - 1]].hi));
    per_cell[k] = local_moments(d, c).second_moment_about(points[order[k]]);
  }
  return std::max(0.0, kernels::sum(per_cell));
}

double energy_K(std::span<const double> points, const DensitySpec& d, Domain1D dom) {
  return *voronoi_regions(points, dom, d).energy;
}

std::vector<double> cell_centroids(const Tessellation& t, const DensitySpec& d) {
  std::vector<double> c(t.size());
  centroids_into(t.boundaries, d, c);
  return c;
}

Tessellation lloyd_step(const Tessellation& t, const DensitySpec& d) {
  const auto next = cell_centroids(t, d);
  return voronoi_regions(next, t.domain, d);
}

LloydResult lloyd(std::span<const double> init, const DensitySpec& d, Domain1D dom,
                  const LloydOptions& opts) {
  validate_generators(init, dom);
  const double tol = opts.tol.value_or(1e-10 * dom.width());
  if (!(tol > 0.0)) throw Error(ErrorKind::InvalidArgument, "lloyd tolerance must be positive");

  std::vector<double> z(init.begin(), init.end());
  std::vector<double> next(z.size());
  std::vector<double> m;
  if (opts.observer) opts.observer(0, z);

  LloydResult res;
  for (int it = 1; it <= opts.max_iter; ++it) {
    fill_boundaries(z, dom, m);
    centroids_into(m, d, next);
    res.displacement = kernels::max_abs_diff(next, z);
    res.iterations = it;
    z.swap(next);
    if (opts.observer) opts.observer(it, z);
    if (res.displacement < tol) {
      res.converged = true;
      break;
    }
  }
  res.tessellation = voronoi_regions(z, dom, d);
  return res;
}

double centroid_deviation(std::span<const double> points, const DensitySpec& d, Domain1D dom) {
  const Tessellation t = voronoi_regions(points, dom);
  const auto c = cell_centroids(t, d);
  return kernels::max_abs_diff(c, points);
}

bool is_cvt(std::span<const double> points, const DensitySpec& d, Domain1D dom, double tol) {
  return centroid_deviation(points, d, dom) <= tol;
}

std::vector<double> uniform_init(std::size_t n, Domain1D dom) {
  std::vector<double> z(n);
  const double h = dom.width() / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) z[i] = dom.a + (static_cast<double>(i) + 0.5) * h;
  return z;
}

}  // namespace cvtalloc
