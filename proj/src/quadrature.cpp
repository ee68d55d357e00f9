#include "cvtalloc/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>
#include <vector>

#include "cvtalloc/errors.hpp"
#include "cvtalloc/kernels.hpp"

namespace cvtalloc::quadrature {
namespace {

// Gauss-Kronrod 7/15 abscissae and weights on [-1, 1] (QUADPACK qk15).
constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

// 15 nodes padded to 16 so the SIMD reductions see full lanes.
constexpr std::size_t kNodes = 16;

struct Rule {
  std::array<double, kNodes> xi{};
  std::array<double, kNodes> wk{};
  std::array<double, kNodes> wg{};
};

constexpr Rule make_rule() {
  Rule r{};
  for (std::size_t j = 0; j < 7; ++j) {
    r.xi[j] = -kXgk[j];
    r.xi[14 - j] = kXgk[j];
    r.wk[j] = r.wk[14 - j] = kWgk[j];
    if (j % 2 == 1) r.wg[j] = r.wg[14 - j] = kWg[j / 2];
  }
  r.xi[7] = 0.0;
  r.wk[7] = kWgk[7];
  r.wg[7] = kWg[3];
  return r;
}

constexpr Rule kRule = make_rule();

enum class Map { Finite, UpperInfinite, LowerInfinite, BothInfinite };

struct Segment {
  double u0 = 0.0;
  double u1 = 0.0;
  std::array<double, 3> value{};
  std::array<double, 3> error{};
  double priority = 0.0;
  bool operator<(const Segment& o) const { return priority < o.priority; }
};

class Integrator {
 public:
  Integrator(const BatchFn& f, double lo, double hi, double center, double scale)
      : f_(f), lo_(lo), hi_(hi), center_(center), inv_scale_(1.0 / scale) {
    const bool lo_inf = std::isinf(lo);
    const bool hi_inf = std::isinf(hi);
    if (lo_inf && hi_inf) {
      map_ = Map::BothInfinite;
      u_lo_ = -1.0;
      u_hi_ = 1.0;
    } else if (hi_inf) {
      map_ = Map::UpperInfinite;
      u_lo_ = 0.0;
      u_hi_ = 1.0;
    } else if (lo_inf) {
      map_ = Map::LowerInfinite;
      u_lo_ = 0.0;
      u_hi_ = 1.0;
    } else {
      map_ = Map::Finite;
      u_lo_ = lo;
      u_hi_ = hi;
    }
  }

  double u_lo() const { return u_lo_; }
  double u_hi() const { return u_hi_; }

  Segment evaluate(double u0, double u1) {
    const double mid = 0.5 * (u0 + u1);
    const double half = 0.5 * (u1 - u0);
    std::array<double, kNodes> x{};
    std::array<double, kNodes> jac{};
    for (std::size_t j = 0; j < kNodes; ++j) {
      const double u = mid + half * kRule.xi[j];
      map_point(u, x[j], jac[j]);
    }
    std::array<double, kNodes> fx{};
    f_(std::span<const double>(x.data(), 15), std::span<double>(fx.data(), 15));
    std::array<double, kNodes> t{};
    for (std::size_t j = 0; j < 15; ++j) {
      fx[j] *= jac[j];
      t[j] = (x[j] - center_) * inv_scale_;
    }
    fx[15] = 0.0;
    t[15] = 0.0;
    const auto k = kernels::weighted_moments(kRule.wk, t, fx);
    const auto g = kernels::weighted_moments(kRule.wg, t, fx);

    Segment s;
    s.u0 = u0;
    s.u1 = u1;
    const std::array<double, 3> kv = {k.m0, k.m1, k.m2};
    const std::array<double, 3> gv = {g.m0, g.m1, g.m2};
    for (int p = 0; p < 3; ++p) {
      // QUADPACK-style error scaling per component.
      const double mean = kv[p] * 0.5;
      double resasc = 0.0;
      double resabs = 0.0;
      for (std::size_t j = 0; j < 15; ++j) {
        const double gj = fx[j] * ipow(t[j], p);
        resasc += kRule.wk[j] * std::fabs(gj - mean);
        resabs += kRule.wk[j] * std::fabs(gj);
      }
      resasc *= std::fabs(half);
      resabs *= std::fabs(half);
      double err = std::fabs((kv[p] - gv[p]) * half);
      if (resasc != 0.0 && err != 0.0) err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
      constexpr double eps = std::numeric_limits<double>::epsilon();
      if (resabs > std::numeric_limits<double>::min() / (50.0 * eps))
        err = std::max(50.0 * eps * resabs, err);
      s.value[p] = kv[p] * half;
      s.error[p] = err;
    }
    return s;
  }

 private:
  static double ipow(double t, int p) { return p == 0 ? 1.0 : (p == 1 ? t : t * t); }

  void map_point(double u, double& x, double& jac) const {
    switch (map_) {
      case Map::Finite:
        x = u;
        jac = 1.0;
        return;
      case Map::UpperInfinite: {
        const double d = 1.0 - u;
        x = lo_ + u / d;
        jac = 1.0 / (d * d);
        return;
      }
      case Map::LowerInfinite: {
        const double d = 1.0 - u;
        x = hi_ - u / d;
        jac = 1.0 / (d * d);
        return;
      }
      case Map::BothInfinite: {
        const double d = 1.0 - u * u;
        x = u / d;
        jac = (1.0 + u * u) / (d * d);
        return;
      }
    }
  }

  const BatchFn& f_;
  double lo_;
  double hi_;
  double center_;
  double inv_scale_;
  Map map_ = Map::Finite;
  double u_lo_ = 0.0;
  double u_hi_ = 0.0;
};

Moments integrate_impl(const BatchFn& f, double lo, double hi, double center, double scale,
                       const Options& opts, int checked) {
  if (!(lo <= hi)) throw Error(ErrorKind::InvalidArgument, "integration bounds out of order");
  if (!(scale > 0.0) || !std::isfinite(scale) || !std::isfinite(center))
    throw Error(ErrorKind::InvalidArgument, "moment center/scale must be finite, scale > 0");
  Moments out;
  if (lo == hi) {
    out.converged = true;
    return out;
  }

  Integrator integ(f, lo, hi, center, scale);
  std::priority_queue<Segment> heap;
  std::array<double, 3> total{};
  std::array<double, 3> total_err{};

  auto push = [&](Segment s) {
    for (int p = 0; p < 3; ++p) {
      total[p] += s.value[p];
      total_err[p] += s.error[p];
    }
    s.priority = 0.0;
    for (int p = 0; p < checked; ++p) s.priority = std::max(s.priority, s.error[p]);
    heap.push(s);
  };
  auto accepted = [&] {
    const double floor0 = std::fabs(total[0]);
    for (int p = 0; p < checked; ++p) {
      const double tol = std::max(opts.abs_tol, opts.rel_tol * std::max(std::fabs(total[p]), floor0));
      if (total_err[p] > tol) return false;
    }
    return true;
  };

  push(integ.evaluate(integ.u_lo(), integ.u_hi()));
  int count = 1;
  while (!accepted() && count < opts.max_subintervals) {
    const Segment worst = heap.top();
    heap.pop();
    for (int p = 0; p < 3; ++p) {
      total[p] -= worst.value[p];
      total_err[p] -= worst.error[p];
    }
    const double mid = 0.5 * (worst.u0 + worst.u1);
    if (!(mid > worst.u0 && mid < worst.u1)) {
      // Cannot bisect further in floating point.
      push(worst);
      break;
    }
    push(integ.evaluate(worst.u0, mid));
    push(integ.evaluate(mid, worst.u1));
    ++count;
  }

  // Re-sum from the leaves to shed the drift of the running add/subtract.
  total = {};
  total_err = {};
  std::vector<Segment> leaves;
  leaves.reserve(heap.size());
  while (!heap.empty()) {
    leaves.push_back(heap.top());
    heap.pop();
  }
  std::sort(leaves.begin(), leaves.end(), [](const Segment& a, const Segment& b) { return a.u0 < b.u0; });
  for (const auto& s : leaves) {
    for (int p = 0; p < 3; ++p) {
      total[p] += s.value[p];
      total_err[p] += s.error[p];
    }
  }
  out.m0 = total[0];
  out.m1 = total[1];
  out.m2 = total[2];
  out.abs_error = 0.0;
  for (int p = 0; p < checked; ++p) out.abs_error = std::max(out.abs_error, total_err[p]);
  out.subintervals = count;
  out.converged = accepted();
  return out;
}

}  // namespace

Moments integrate_moments(const BatchFn& f, double lo, double hi, double center, double scale,
                          const Options& opts) {
  return integrate_impl(f, lo, hi, center, scale, opts, 3);
}

double integrate(const std::function<double(double)>& f, double lo, double hi, const Options& opts) {
  const BatchFn batch = [&f](std::span<const double> x, std::span<double> out) {
    for (std::size_t j = 0; j < x.size(); ++j) out[j] = f(x[j]);
  };
  double center = 0.0;
  double scale = 1.0;
  if (std::isfinite(lo) && std::isfinite(hi) && hi > lo) {
    center = 0.5 * (lo + hi);
    scale = 0.5 * (hi - lo);
  }
  const auto m = integrate_impl(batch, lo, hi, center, scale, opts, 1);
  if (!m.converged)
    throw Error(ErrorKind::QuadratureNonConvergence, "tolerance not reached within subdivision budget");
  return m.m0;
}

}  // namespace cvtalloc::quadrature
