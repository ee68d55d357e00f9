#pragma once

// Independent reference computations for the tests. Nothing here calls into
// the library: integrals use composite Simpson, roots use bisection, and the
// plant is integrated with classical RK4.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

namespace oracle {

/// Composite Simpson with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n = 20000) {
  if (n % 2) ++n;
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

inline double normal_pdf(double x, double mu, double sigma2) {
  const double d = x - mu;
  return std::exp(-d * d / (2.0 * sigma2)) / std::sqrt(2.0 * std::numbers::pi * sigma2);
}

inline double exponential_pdf(double x, double lambda) { return x < 0.0 ? 0.0 : lambda * std::exp(-lambda * x); }

inline double gamma_pdf(double x, double k, double theta) {
  if (x < 0.0) return 0.0;
  if (x == 0.0) return k == 1.0 ? 1.0 / theta : (k < 1.0 ? INFINITY : 0.0);
  return std::exp((k - 1.0) * std::log(x) - x / theta - std::lgamma(k) - k * std::log(theta));
}

/// Root of a sign-changing f on [lo, hi].
inline double bisect(const std::function<double(double)>& f, double lo, double hi, int iters = 200) {
  double flo = f(lo);
  for (int i = 0; i < iters; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// Centroid of [lo, hi] under pdf, by Simpson.
inline double centroid(const std::function<double(double)>& pdf, double lo, double hi, int n = 20000) {
  const double m0 = simpson(pdf, lo, hi, n);
  const double m1 = simpson([&](double x) { return x * pdf(x); }, lo, hi, n);
  return m1 / m0;
}

/// Quantization energy of sorted points on [a, b] under pdf, by Simpson per cell.
inline double energy(const std::vector<double>& z, const std::function<double(double)>& pdf, double a, double b,
                     int n = 2000) {
  double e = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double lo = i == 0 ? a : 0.5 * (z[i - 1] + z[i]);
    const double hi = i + 1 == z.size() ? b : 0.5 * (z[i] + z[i + 1]);
    e += simpson([&](double x) { return (x - z[i]) * (x - z[i]) * pdf(x); }, lo, hi, n);
  }
  return e;
}

/// Classical RK4 for x' = A x + B u + G w with u and w held over [0, t].
inline Eigen::Vector3d rk4(const Eigen::Matrix3d& A, const Eigen::Vector3d& B, const Eigen::Matrix<double, 3, 2>& G,
                           Eigen::Vector3d x, double u, const Eigen::Vector2d& w, double t, int steps) {
  const double h = t / steps;
  const Eigen::Vector3d drive = B * u + G * w;
  const auto f = [&](const Eigen::Vector3d& s) -> Eigen::Vector3d { return A * s + drive; };
  for (int i = 0; i < steps; ++i) {
    const Eigen::Vector3d k1 = f(x);
    const Eigen::Vector3d k2 = f(x + 0.5 * h * k1);
    const Eigen::Vector3d k3 = f(x + 0.5 * h * k2);
    const Eigen::Vector3d k4 = f(x + h * k3);
    x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return x;
}

/// Plant matrices rebuilt by hand from the RC parameters.
struct Rc {
  double K1, K2, K3, K4, K5, C1, C2, C3;
  Eigen::Matrix3d A() const {
    Eigen::Matrix3d m;
    m << -(K1 + K2 + K3 + K5) / C1, (K1 + K2) / C1, K5 / C1, (K1 + K2) / C2, -(K1 + K2) / C2, 0.0, K1 / C3, 0.0,
        -(K4 + K5) / C3;
    return m;
  }
  Eigen::Vector3d B() const { return {1.0 / C1 + 1.0 / C2, 0.0, 0.0}; }
  Eigen::Matrix<double, 3, 2> G() const {
    Eigen::Matrix<double, 3, 2> m;
    m << K3 / C1, 1.0 / C1, 0.0, 1.0 / C2, K4 / C3, 0.0;
    return m;
  }
};

inline constexpr Rc kMeanRc{16.48, 108.5, 5.0, 30.5, 23.04, 9.36e5, 2.97e6, 6.695e5};

}  // namespace oracle
