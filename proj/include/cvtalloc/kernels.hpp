#pragma once

// Data-parallel inner loops shared by the quadrature, tessellation and
// allocation code. Every kernel has a scalar reference implementation; SIMD
// variants are selected once at startup from the CPU's capabilities and can be
// overridden with set_backend() (tests use this to compare backends).
//
// Elementwise kernels (add_scalar, midpoints, max_abs_diff) are bit-identical
// across backends. Reductions (sum, weighted_moments) are reordered by the SIMD
// variants and agree with the scalar path only to rounding.

#include <array>
#include <cstddef>
#include <span>
#include <string_view>

namespace cvtalloc::kernels {

enum class Backend { Scalar, Avx2, Neon };

struct MomentSums {
  double m0 = 0.0;  // sum w f
  double m1 = 0.0;  // sum w t f
  double m2 = 0.0;  // sum w t^2 f
};

struct KernelTable {
  double (*sum)(const double* x, std::size_t n);
  void (*add_scalar)(double* x, std::size_t n, double c);
  void (*midpoints)(const double* z, std::size_t n, double* out);
  double (*max_abs_diff)(const double* a, const double* b, std::size_t n);
  MomentSums (*weighted_moments)(const double* w, const double* t, const double* f,
                                 std::size_t n);
};

bool backend_available(Backend b) noexcept;
std::string_view backend_name(Backend b) noexcept;

/// Backend used by the free functions below.
Backend active_backend() noexcept;

/// Throws std::invalid_argument if the backend is not available on this CPU.
void set_backend(Backend b);

/// Direct access to one backend's kernels, independent of the active one.
const KernelTable& table(Backend b);

double sum(std::span<const double> x);
void add_scalar(std::span<double> x, double c);

/// out[i] = (z[i] + z[i+1]) / 2; out must hold z.size() - 1 values.
void midpoints(std::span<const double> z, std::span<double> out);

double max_abs_diff(std::span<const double> a, std::span<const double> b);

MomentSums weighted_moments(std::span<const double> w, std::span<const double> t,
                            std::span<const double> f);

namespace detail {
const KernelTable& scalar_table() noexcept;
const KernelTable* avx2_table() noexcept;  // nullptr when not compiled in
const KernelTable* neon_table() noexcept;  // nullptr when not compiled in
}  // namespace detail

}  // namespace cvtalloc::kernels
