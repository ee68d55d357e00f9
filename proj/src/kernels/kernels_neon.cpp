#include "cvtalloc/kernels.hpp"

#if defined(__aarch64__) && defined(__ARM_NEON)

#include <arm_neon.h>

#include <cmath>

namespace cvtalloc::kernels::detail {
namespace {

double sum_neon(const double* x, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vaddq_f64(acc0, vld1q_f64(x + i));
    acc1 = vaddq_f64(acc1, vld1q_f64(x + i + 2));
  }
  double s = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) s += x[i];
  return s;
}

void add_scalar_neon(double* x, std::size_t n, double c) {
  const float64x2_t vc = vdupq_n_f64(c);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(x + i, vaddq_f64(vld1q_f64(x + i), vc));
  for (; i < n; ++i) x[i] += c;
}

void midpoints_neon(const double* z, std::size_t n, double* out) {
  if (n < 2) return;
  const std::size_t m = n - 1;
  const float64x2_t half = vdupq_n_f64(0.5);
  std::size_t i = 0;
  for (; i + 2 <= m; i += 2)
    vst1q_f64(out + i, vmulq_f64(vaddq_f64(vld1q_f64(z + i), vld1q_f64(z + i + 1)), half));
  for (; i < m; ++i) out[i] = (z[i] + z[i + 1]) * 0.5;
}

double max_abs_diff_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    acc = vmaxnmq_f64(acc, vabdq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  double m = vmaxnmvq_f64(acc);
  for (; i < n; ++i) m = std::fmax(m, std::fabs(a[i] - b[i]));
  return m;
}

MomentSums weighted_moments_neon(const double* w, const double* t, const double* f,
                                 std::size_t n) {
  float64x2_t s0 = vdupq_n_f64(0.0);
  float64x2_t s1 = vdupq_n_f64(0.0);
  float64x2_t s2 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t vt = vld1q_f64(t + i);
    const float64x2_t wf = vmulq_f64(vld1q_f64(w + i), vld1q_f64(f + i));
    const float64x2_t wft = vmulq_f64(wf, vt);
    s0 = vaddq_f64(s0, wf);
    s1 = vaddq_f64(s1, wft);
    s2 = vaddq_f64(s2, vmulq_f64(wft, vt));
  }
  MomentSums s{vaddvq_f64(s0), vaddvq_f64(s1), vaddvq_f64(s2)};
  for (; i < n; ++i) {
    const double wf = w[i] * f[i];
    s.m0 += wf;
    s.m1 += wf * t[i];
    s.m2 += (wf * t[i]) * t[i];
  }
  return s;
}

}  // namespace

const KernelTable* neon_table() noexcept {
  static const KernelTable t{sum_neon, add_scalar_neon, midpoints_neon, max_abs_diff_neon,
                             weighted_moments_neon};
  return &t;
}

}  // namespace cvtalloc::kernels::detail

#else

namespace cvtalloc::kernels::detail {
const KernelTable* neon_table() noexcept { return nullptr; }
}  // namespace cvtalloc::kernels::detail

#endif
