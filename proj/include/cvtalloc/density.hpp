#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "cvtalloc/quadrature.hpp"

namespace cvtalloc {

enum class Family { Uniform, Gaussian, Exponential, Gamma };

std::string_view to_string(Family f) noexcept;

/// Closed interval on the resource axis. Infinite endpoints are allowed for
/// support queries (e.g. [0, +inf) for the exponential family).
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double width() const { return hi - lo; }
  bool finite() const { return std::isfinite(lo) && std::isfinite(hi); }
};

/// One-dimensional density family with its parameters. At most one parameter
/// may be declared free; a free parameter has no value until bound.
///
/// Parameter names: uniform {a, b}; gaussian {mu, sigma2}; exponential {lambda};
/// gamma {k, theta}.
class DensitySpec {
 public:
  static DensitySpec uniform(double a, double b);
  static DensitySpec gaussian(double mu, double sigma2);
  static DensitySpec exponential(double lambda);
  static DensitySpec gamma(double k, double theta);

  /// Builds a spec from parameter values; `free_name` (if any) marks that
  /// parameter as unknown and its entry in `values` is ignored.
  static DensitySpec make(Family family, std::span<const double> values,
                          std::optional<std::string_view> free_name = std::nullopt);

  /// Same spec with `name` declared free (its current value is dropped).
  DensitySpec with_free(std::string_view name) const;

  Family family() const noexcept { return family_; }
  std::size_t param_count() const noexcept;
  std::string_view param_name(std::size_t i) const;
  std::optional<std::size_t> param_index(std::string_view name) const noexcept;

  /// Throws UnboundFreeParameter when the parameter is the free one.
  double param(std::string_view name) const;
  double param(std::size_t i) const;

  std::optional<std::string_view> free_parameter() const;
  bool is_bound() const noexcept { return !free_.has_value(); }

  /// Natural support of the family (uniform: [a,b]; gaussian: R; others: [0, inf)).
  Interval support() const;

  /// Density value; 0 outside the support. Requires a bound spec.
  double pdf(double x) const;
  void pdf(std::span<const double> x, std::span<double> out) const;

  std::string describe() const;

  friend bool operator==(const DensitySpec& a, const DensitySpec& b);

 private:
  DensitySpec(Family f, std::array<double, 2> v, std::optional<std::size_t> free);
  void validate() const;
  void require_bound() const;
  void refresh_constants();

  Family family_ = Family::Uniform;
  std::array<double, 2> values_{};
  std::optional<std::size_t> free_;
  // Cached normalisation terms for pdf evaluation.
  double norm_ = 0.0;
  double aux_ = 0.0;
};

/// Returns a concrete copy of `d` with its free parameter set to `value`.
/// Throws NoFreeParameter or InvalidParameterValue.
DensitySpec bind_free_parameter(const DensitySpec& d, double value);

enum class IntegrationMethod {
  Auto,        // closed form for uniform/gaussian, quadrature otherwise
  Quadrature,  // always adaptive quadrature
};

const quadrature::Options& default_quadrature_options();

/// Integral of the density over iv. The family density is used as-is; it is
/// not renormalised to unit mass on a bounded domain.
double mass(const DensitySpec& d, Interval iv, IntegrationMethod m = IntegrationMethod::Auto);
double first_moment(const DensitySpec& d, Interval iv,
                    IntegrationMethod m = IntegrationMethod::Auto);

/// Mass centroid of iv. Throws EmptyCell when the mass is not above
/// 1e-300 * width (gaussian cells are evaluated in a ratio form that does not
/// underflow, so they only fail on zero-width intervals).
double centroid(const DensitySpec& d, Interval iv, IntegrationMethod m = IntegrationMethod::Auto);

/// Moments of a finite interval about its midpoint c with half-width h:
/// m0 = int rho, m1 = int ((x-c)/h) rho, m2 = int ((x-c)/h)^2 rho.
struct LocalMoments {
  double center = 0.0;
  double half_width = 0.0;
  double m0 = 0.0;
  double m1 = 0.0;
  double m2 = 0.0;

  /// int rho(x) (x - p)^2 dx over the interval.
  double second_moment_about(double p) const {
    const double d = p - center;
    return half_width * half_width * m2 - 2.0 * half_width * d * m1 + d * d * m0;
  }
};

LocalMoments local_moments(const DensitySpec& d, Interval iv,
                           IntegrationMethod m = IntegrationMethod::Auto);

inline constexpr double kMassFloorPerWidth = 1e-300;

}  // namespace cvtalloc
