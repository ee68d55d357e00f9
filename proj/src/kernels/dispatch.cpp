#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "cvtalloc/kernels.hpp"

namespace cvtalloc::kernels {
namespace {

bool cpu_has_avx2() noexcept {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

Backend detect() noexcept {
  // CVTALLOC_KERNELS=scalar pins the reference path (useful when bisecting
  // last-bit differences between machines).
  if (const char* env = std::getenv("CVTALLOC_KERNELS")) {
    const std::string v(env);
    if (v == "scalar") return Backend::Scalar;
  }
  if (backend_available(Backend::Avx2)) return Backend::Avx2;
  if (backend_available(Backend::Neon)) return Backend::Neon;
  return Backend::Scalar;
}

std::atomic<Backend>& active() noexcept {
  static std::atomic<Backend> b{detect()};
  return b;
}

const KernelTable& current() { return table(active().load(std::memory_order_relaxed)); }

}  // namespace

bool backend_available(Backend b) noexcept {
  switch (b) {
    case Backend::Scalar: return true;
    case Backend::Avx2: return detail::avx2_table() != nullptr && cpu_has_avx2();
    case Backend::Neon: return detail::neon_table() != nullptr;
  }
  return false;
}

std::string_view backend_name(Backend b) noexcept {
  switch (b) {
    case Backend::Scalar: return "scalar";
    case Backend::Avx2: return "avx2";
    case Backend::Neon: return "neon";
  }
  return "unknown";
}

Backend active_backend() noexcept { return active().load(std::memory_order_relaxed); }

void set_backend(Backend b) {
  if (!backend_available(b))
    throw std::invalid_argument("kernel backend not available: " + std::string(backend_name(b)));
  active().store(b, std::memory_order_relaxed);
}

const KernelTable& table(Backend b) {
  switch (b) {
    case Backend::Avx2:
      if (backend_available(b)) return *detail::avx2_table();
      break;
    case Backend::Neon:
      if (backend_available(b)) return *detail::neon_table();
      break;
    case Backend::Scalar: return detail::scalar_table();
  }
  throw std::invalid_argument("kernel backend not available: " + std::string(backend_name(b)));
}

double sum(std::span<const double> x) { return current().sum(x.data(), x.size()); }

void add_scalar(std::span<double> x, double c) { current().add_scalar(x.data(), x.size(), c); }

void midpoints(std::span<const double> z, std::span<double> out) {
  if (z.empty()) return;
  if (out.size() + 1 != z.size()) throw std::invalid_argument("midpoints: output size mismatch");
  current().midpoints(z.data(), z.size(), out.data());
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("max_abs_diff: size mismatch");
  return current().max_abs_diff(a.data(), b.data(), a.size());
}

MomentSums weighted_moments(std::span<const double> w, std::span<const double> t,
                            std::span<const double> f) {
  if (w.size() != t.size() || w.size() != f.size())
    throw std::invalid_argument("weighted_moments: size mismatch");
  return current().weighted_moments(w.data(), t.data(), f.data(), w.size());
}

}  // namespace cvtalloc::kernels
