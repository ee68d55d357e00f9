#include "cvtalloc/kernels.hpp"

#include <cmath>

namespace cvtalloc::kernels::detail {
namespace {

double sum_scalar(const double* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i];
  return s;
}

void add_scalar_scalar(double* x, std::size_t n, double c) {
  for (std::size_t i = 0; i < n; ++i) x[i] += c;
}

void midpoints_scalar(const double* z, std::size_t n, double* out) {
  for (std::size_t i = 0; i + 1 < n; ++i) out[i] = (z[i] + z[i + 1]) * 0.5;
}

double max_abs_diff_scalar(const double* a, const double* b, std::size_t n) {
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i) m = std::fmax(m, std::fabs(a[i] - b[i]));
  return m;
}

MomentSums weighted_moments_scalar(const double* w, const double* t, const double* f,
                                   std::size_t n) {
  MomentSums s;
  for (std::size_t i = 0; i < n; ++i) {
    const double wf = w[i] * f[i];
    s.m0 += wf;
    s.m1 += wf * t[i];
    s.m2 += (wf * t[i]) * t[i];
  }
  return s;
}

}  // namespace

const KernelTable& scalar_table() noexcept {
  static const KernelTable t{sum_scalar, add_scalar_scalar, midpoints_scalar,
                             max_abs_diff_scalar, weighted_moments_scalar};
  return t;
}

}  // namespace cvtalloc::kernels::detail
