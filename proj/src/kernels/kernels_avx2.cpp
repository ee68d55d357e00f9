// Compiled with -mavx2 only (no FMA contraction) so the elementwise kernels
// round exactly like the scalar reference.
#include "cvtalloc/kernels.hpp"

#if defined(CVTALLOC_HAVE_AVX2)

#include <immintrin.h>

#include <cmath>

namespace cvtalloc::kernels::detail {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

inline double hmax(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d m = _mm_max_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_max_sd(m, _mm_unpackhi_pd(m, m)));
}

double sum_avx2(const double* x, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(x + i));
    acc1 = _mm256_add_pd(acc1, _mm256_loadu_pd(x + i + 4));
  }
  if (i + 4 <= n) {
    acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(x + i));
    i += 4;
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += x[i];
  return s;
}

void add_scalar_avx2(double* x, std::size_t n, double c) {
  const __m256d vc = _mm256_set1_pd(c);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(x + i, _mm256_add_pd(_mm256_loadu_pd(x + i), vc));
  for (; i < n; ++i) x[i] += c;
}

void midpoints_avx2(const double* z, std::size_t n, double* out) {
  if (n < 2) return;
  const std::size_t m = n - 1;
  const __m256d half = _mm256_set1_pd(0.5);
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    const __m256d a = _mm256_loadu_pd(z + i);
    const __m256d b = _mm256_loadu_pd(z + i + 1);
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_add_pd(a, b), half));
  }
  for (; i < m; ++i) out[i] = (z[i] + z[i + 1]) * 0.5;
}

double max_abs_diff_avx2(const double* a, const double* b, std::size_t n) {
  const __m256d sign = _mm256_set1_pd(-0.0);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_max_pd(acc, _mm256_andnot_pd(sign, d));
  }
  double m = hmax(acc);
  for (; i < n; ++i) m = std::fmax(m, std::fabs(a[i] - b[i]));
  return m;
}

MomentSums weighted_moments_avx2(const double* w, const double* t, const double* f,
                                 std::size_t n) {
  __m256d s0 = _mm256_setzero_pd();
  __m256d s1 = _mm256_setzero_pd();
  __m256d s2 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d vt = _mm256_loadu_pd(t + i);
    const __m256d wf = _mm256_mul_pd(_mm256_loadu_pd(w + i), _mm256_loadu_pd(f + i));
    const __m256d wft = _mm256_mul_pd(wf, vt);
    s0 = _mm256_add_pd(s0, wf);
    s1 = _mm256_add_pd(s1, wft);
    s2 = _mm256_add_pd(s2, _mm256_mul_pd(wft, vt));
  }
  MomentSums s{hsum(s0), hsum(s1), hsum(s2)};
  for (; i < n; ++i) {
    const double wf = w[i] * f[i];
    s.m0 += wf;
    s.m1 += wf * t[i];
    s.m2 += (wf * t[i]) * t[i];
  }
  return s;
}

}  // namespace

const KernelTable* avx2_table() noexcept {
  static const KernelTable t{sum_avx2, add_scalar_avx2, midpoints_avx2, max_abs_diff_avx2,
                             weighted_moments_avx2};
  return &t;
}

}  // namespace cvtalloc::kernels::detail

#else

namespace cvtalloc::kernels::detail {
const KernelTable* avx2_table() noexcept { return nullptr; }
}  // namespace cvtalloc::kernels::detail

#endif
