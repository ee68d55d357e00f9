#pragma once

#include <functional>
#include <span>

namespace cvtalloc::quadrature {

struct Options {
  double abs_tol = 1e-12;
  double rel_tol = 1e-10;
  int max_subintervals = 2000;
};

/// Evaluates the integrand at a batch of abscissae: out[j] = f(x[j]).
using BatchFn = std::function<void(std::span<const double> x, std::span<double> out)>;

/// Result of integrating f(x) * t(x)^p for p = 0, 1, 2 with t(x) = (x - center) / scale.
struct Moments {
  double m0 = 0.0;
  double m1 = 0.0;
  double m2 = 0.0;
  double abs_error = 0.0;   // largest component error estimate
  int subintervals = 0;
  bool converged = false;
};

/// Adaptive Gauss-Kronrod (7/15) integration of the three weighted moments at once.
/// Infinite endpoints are mapped onto a finite parameter interval with
/// x = lo + u/(1-u) (and mirrored forms); the caller chooses center/scale.
/// Components are accepted when err <= max(abs_tol, rel_tol * max(|I_p|, |I_0|)).
Moments integrate_moments(const BatchFn& f, double lo, double hi, double center, double scale,
                          const Options& opts = {});

/// Plain scalar integral of f over [lo, hi] (same scheme, one component).
double integrate(const std::function<double(double)>& f, double lo, double hi,
                 const Options& opts = {});

}  // namespace cvtalloc::quadrature
