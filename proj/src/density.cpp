#include "cvtalloc/density.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <numbers>

#include "cvtalloc/errors.hpp"

namespace cvtalloc {
namespace {

constexpr std::array<std::array<std::string_view, 2>, 4> kNames = {{
    {"a", "b"},
    {"mu", "sigma2"},
    {"lambda", ""},
    {"k", "theta"},
}};

std::size_t family_index(Family f) { return static_cast<std::size_t>(f); }

// ---------------------------------------------------------------------------
// Standard normal helpers. Tail quantities go through the scaled complementary
// error function so far-tail cells keep full relative precision.

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double std_pdf(double t) {
  if (std::isinf(t)) return 0.0;
  return kInvSqrt2Pi * std::exp(-0.5 * t * t);
}

// erfcx(x) = exp(x^2) erfc(x), x >= 0.
double erfcx(double x) {
  if (x < 4.0) return std::exp(x * x) * std::erfc(x);
  // Continued fraction 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...)))), modified Lentz.
  constexpr double tiny = 1e-300;
  double f = x;
  double c = x;
  double d = 0.0;
  for (int n = 1; n < 500; ++n) {
    const double a = 0.5 * n;
    d = x + a * d;
    if (d == 0.0) d = tiny;
    c = x + a / c;
    if (c == 0.0) c = tiny;
    d = 1.0 / d;
    const double delta = c * d;
    f *= delta;
    if (std::fabs(delta - 1.0) < 1e-16) break;
  }
  return 1.0 / (f * std::sqrt(std::numbers::pi));
}

// Mills ratio Q(t) / phi(t) for t >= 0.
double mills(double t) {
  if (std::isinf(t)) return 0.0;
  return std::sqrt(std::numbers::pi / 2.0) * erfcx(t * kInvSqrt2);
}

// Standard normal mass on [alpha, beta].
double std_mass(double alpha, double beta) {
  if (alpha >= 0.0) return 0.5 * (std::erfc(alpha * kInvSqrt2) - std::erfc(beta * kInvSqrt2));
  if (beta <= 0.0) return 0.5 * (std::erfc(-beta * kInvSqrt2) - std::erfc(-alpha * kInvSqrt2));
  return 0.5 * (std::erf(beta * kInvSqrt2) - std::erf(alpha * kInvSqrt2));
}

// (phi(alpha) - phi(beta)) / (Q(alpha) - Q(beta)) for 0 <= alpha < beta <= inf,
// i.e. the standardized centroid of a right-tail cell. Both numerator and
// denominator are divided by phi(alpha) so nothing underflows.
double right_tail_ratio(double alpha, double beta) {
  const double ma = mills(alpha);
  if (std::isinf(beta)) return 1.0 / ma;
  const double d = 0.5 * (beta - alpha) * (beta + alpha);
  const double e = std::exp(-d);
  const double num = -std::expm1(-d);
  const double den = ma - e * mills(beta);
  return num / den;
}

double gaussian_centroid(double mu, double s, double lo, double hi) {
  const double alpha = (lo - mu) / s;
  const double beta = (hi - mu) / s;
  double c = 0.0;
  if (alpha >= 0.0) {
    c = mu + s * right_tail_ratio(alpha, beta);
  } else if (beta <= 0.0) {
    c = mu - s * right_tail_ratio(-beta, -alpha);
  } else {
    c = mu + s * (std_pdf(alpha) - std_pdf(beta)) / std_mass(alpha, beta);
  }
  return std::clamp(c, lo, hi);
}

[[noreturn]] void empty_cell(const DensitySpec& d, Interval iv, double m) {
  throw Error(ErrorKind::EmptyCell, fmt::format("{} has mass {:.3g} on [{:.15g}, {:.15g}]",
                                                d.describe(), m, iv.lo, iv.hi));
}

void check_interval(Interval iv) {
  if (std::isnan(iv.lo) || std::isnan(iv.hi) || iv.lo > iv.hi)
    throw Error(ErrorKind::InvalidArgument,
                fmt::format("interval [{}, {}] is not ordered", iv.lo, iv.hi));
}

Interval clip(Interval iv, Interval support) {
  return {std::max(iv.lo, support.lo), std::min(iv.hi, support.hi)};
}

struct RawMoments {
  double m0 = 0.0;
  double m1 = 0.0;  // int x rho
};

RawMoments quadrature_raw(const DensitySpec& d, Interval iv) {
  const Interval c = clip(iv, d.support());
  if (!(c.lo < c.hi)) return {};
  const quadrature::BatchFn f = [&d](std::span<const double> x, std::span<double> out) {
    d.pdf(x, out);
  };
  double center = 0.0;
  double scale = 1.0;
  if (c.finite()) {
    center = 0.5 * (c.lo + c.hi);
    scale = 0.5 * (c.hi - c.lo);
  } else if (std::isfinite(c.lo)) {
    center = c.lo;
  } else if (std::isfinite(c.hi)) {
    center = c.hi;
  }
  const auto m = quadrature::integrate_moments(f, c.lo, c.hi, center, scale,
                                               default_quadrature_options());
  if (!m.converged)
    throw Error(ErrorKind::QuadratureNonConvergence,
                fmt::format("{} on [{}, {}]: error {:.3g} after {} subintervals", d.describe(),
                            iv.lo, iv.hi, m.abs_error, m.subintervals));
  return {m.m0, center * m.m0 + scale * m.m1};
}

}  // namespace

std::string_view to_string(Family f) noexcept {
  switch (f) {
    case Family::Uniform: return "uniform";
    case Family::Gaussian: return "gaussian";
    case Family::Exponential: return "exponential";
    case Family::Gamma: return "gamma";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// DensitySpec

DensitySpec::DensitySpec(Family f, std::array<double, 2> v, std::optional<std::size_t> free)
    : family_(f), values_(v), free_(free) {
  if (free_) values_[*free_] = std::numeric_limits<double>::quiet_NaN();
  validate();
  refresh_constants();
}

DensitySpec DensitySpec::uniform(double a, double b) { return {Family::Uniform, {a, b}, {}}; }
DensitySpec DensitySpec::gaussian(double mu, double sigma2) {
  return {Family::Gaussian, {mu, sigma2}, {}};
}
DensitySpec DensitySpec::exponential(double lambda) {
  return {Family::Exponential, {lambda, 0.0}, {}};
}
DensitySpec DensitySpec::gamma(double k, double theta) { return {Family::Gamma, {k, theta}, {}}; }

DensitySpec DensitySpec::make(Family family, std::span<const double> values,
                              std::optional<std::string_view> free_name) {
  const std::size_t n = family == Family::Exponential ? 1 : 2;
  if (values.size() != n)
    throw Error(ErrorKind::InvalidDensitySpec,
                fmt::format("{} takes {} parameter(s), got {}", to_string(family), n, values.size()));
  std::array<double, 2> v{};
  std::copy(values.begin(), values.end(), v.begin());
  std::optional<std::size_t> free;
  if (free_name) {
    for (std::size_t i = 0; i < n; ++i)
      if (kNames[family_index(family)][i] == *free_name) free = i;
    if (!free)
      throw Error(ErrorKind::InvalidDensitySpec,
                  fmt::format("{} has no parameter '{}'", to_string(family), *free_name));
  }
  return {family, v, free};
}

DensitySpec DensitySpec::with_free(std::string_view name) const {
  const auto idx = param_index(name);
  if (!idx)
    throw Error(ErrorKind::InvalidDensitySpec,
                fmt::format("{} has no parameter '{}'", to_string(family_), name));
  if (free_ && *free_ != *idx)
    throw Error(ErrorKind::InvalidDensitySpec, "at most one parameter may be free");
  return {family_, values_, idx};
}

std::size_t DensitySpec::param_count() const noexcept {
  return family_ == Family::Exponential ? 1 : 2;
}

std::string_view DensitySpec::param_name(std::size_t i) const {
  if (i >= param_count()) throw Error(ErrorKind::InvalidArgument, "parameter index out of range");
  return kNames[family_index(family_)][i];
}

std::optional<std::size_t> DensitySpec::param_index(std::string_view name) const noexcept {
  for (std::size_t i = 0; i < param_count(); ++i)
    if (kNames[family_index(family_)][i] == name) return i;
  return std::nullopt;
}

double DensitySpec::param(std::size_t i) const {
  if (i >= param_count()) throw Error(ErrorKind::InvalidArgument, "parameter index out of range");
  if (free_ && *free_ == i)
    throw Error(ErrorKind::UnboundFreeParameter,
                fmt::format("parameter '{}' of {} is free", param_name(i), to_string(family_)));
  return values_[i];
}

double DensitySpec::param(std::string_view name) const {
  const auto idx = param_index(name);
  if (!idx)
    throw Error(ErrorKind::InvalidArgument,
                fmt::format("{} has no parameter '{}'", to_string(family_), name));
  return param(*idx);
}

std::optional<std::string_view> DensitySpec::free_parameter() const {
  if (!free_) return std::nullopt;
  return param_name(*free_);
}

void DensitySpec::validate() const {
  auto bad = [&](std::size_t i, std::string_view why) {
    throw Error(ErrorKind::InvalidParameterValue,
                fmt::format("{} parameter {}={} {}", to_string(family_), param_name(i), values_[i], why));
  };
  for (std::size_t i = 0; i < param_count(); ++i) {
    if (free_ && *free_ == i) continue;
    if (!std::isfinite(values_[i])) bad(i, "is not finite");
  }
  switch (family_) {
    case Family::Uniform:
      if (!free_ && !(values_[0] < values_[1])) bad(1, "must exceed a");
      break;
    case Family::Gaussian:
      if (free_ != 1u && !(values_[1] > 0.0)) bad(1, "must be > 0");
      break;
    case Family::Exponential:
      if (free_ != 0u && !(values_[0] > 0.0)) bad(0, "must be > 0");
      break;
    case Family::Gamma:
      if (free_ != 0u && !(values_[0] > 0.0)) bad(0, "must be > 0");
      if (free_ != 1u && !(values_[1] > 0.0)) bad(1, "must be > 0");
      break;
  }
}

void DensitySpec::require_bound() const {
  if (free_)
    throw Error(ErrorKind::UnboundFreeParameter,
                fmt::format("{} has unbound free parameter '{}'", to_string(family_),
                            param_name(*free_)));
}

void DensitySpec::refresh_constants() {
  if (free_) return;
  switch (family_) {
    case Family::Uniform:
      norm_ = 1.0 / (values_[1] - values_[0]);
      break;
    case Family::Gaussian:
      norm_ = 1.0 / std::sqrt(2.0 * std::numbers::pi * values_[1]);
      aux_ = 0.5 / values_[1];
      break;
    case Family::Exponential:
      norm_ = values_[0];
      break;
    case Family::Gamma:
      norm_ = -std::lgamma(values_[0]) - values_[0] * std::log(values_[1]);
      aux_ = 1.0 / values_[1];
      break;
  }
}

Interval DensitySpec::support() const {
  constexpr double inf = std::numeric_limits<double>::infinity();
  switch (family_) {
    case Family::Uniform:
      require_bound();
      return {values_[0], values_[1]};
    case Family::Gaussian: return {-inf, inf};
    case Family::Exponential:
    case Family::Gamma: return {0.0, inf};
  }
  return {-inf, inf};
}

double DensitySpec::pdf(double x) const {
  require_bound();
  switch (family_) {
    case Family::Uniform: return (x >= values_[0] && x <= values_[1]) ? norm_ : 0.0;
    case Family::Gaussian: {
      const double d = x - values_[0];
      return norm_ * std::exp(-d * d * aux_);
    }
    case Family::Exponential: return x < 0.0 ? 0.0 : norm_ * std::exp(-norm_ * x);
    case Family::Gamma:
      if (x <= 0.0) return 0.0;
      return std::exp((values_[0] - 1.0) * std::log(x) - x * aux_ + norm_);
  }
  return 0.0;
}

void DensitySpec::pdf(std::span<const double> x, std::span<double> out) const {
  require_bound();
  if (out.size() < x.size()) throw Error(ErrorKind::InvalidArgument, "pdf: output too small");
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = pdf(x[i]);
}

std::string DensitySpec::describe() const {
  std::string s(to_string(family_));
  s += '(';
  for (std::size_t i = 0; i < param_count(); ++i) {
    if (i) s += ", ";
    s += param_name(i);
    s += '=';
    s += (free_ && *free_ == i) ? std::string("free") : fmt::format("{:.15g}", values_[i]);
  }
  s += ')';
  return s;
}

bool operator==(const DensitySpec& a, const DensitySpec& b) {
  if (a.family_ != b.family_ || a.free_ != b.free_) return false;
  for (std::size_t i = 0; i < a.param_count(); ++i) {
    if (a.free_ && *a.free_ == i) continue;
    if (a.values_[i] != b.values_[i]) return false;
  }
  return true;
}

DensitySpec bind_free_parameter(const DensitySpec& d, double value) {
  const auto name = d.free_parameter();
  if (!name)
    throw Error(ErrorKind::NoFreeParameter, fmt::format("{} has no free parameter", d.describe()));
  std::array<double, 2> v{};
  for (std::size_t i = 0; i < d.param_count(); ++i)
    v[i] = (d.param_name(i) == *name) ? value : d.param(i);
  return DensitySpec::make(d.family(), std::span<const double>(v.data(), d.param_count()));
}

// ---------------------------------------------------------------------------
// Interval integrals

const quadrature::Options& default_quadrature_options() {
  static const quadrature::Options opts{};
  return opts;
}

double mass(const DensitySpec& d, Interval iv, IntegrationMethod m) {
  check_interval(iv);
  if (!d.is_bound()) d.pdf(0.0);  // raises UnboundFreeParameter
  if (m == IntegrationMethod::Auto) {
    switch (d.family()) {
      case Family::Uniform: {
        const Interval c = clip(iv, d.support());
        return c.hi > c.lo ? c.width() / (d.param(1) - d.param(0)) : 0.0;
      }
      case Family::Gaussian: {
        const double s = std::sqrt(d.param(1));
        return std_mass((iv.lo - d.param(0)) / s, (iv.hi - d.param(0)) / s);
      }
      default: break;
    }
  }
  return quadrature_raw(d, iv).m0;
}

double first_moment(const DensitySpec& d, Interval iv, IntegrationMethod m) {
  check_interval(iv);
  if (!d.is_bound()) d.pdf(0.0);
  if (m == IntegrationMethod::Auto) {
    switch (d.family()) {
      case Family::Uniform: {
        const Interval c = clip(iv, d.support());
        if (!(c.hi > c.lo)) return 0.0;
        return 0.5 * (c.hi * c.hi - c.lo * c.lo) / (d.param(1) - d.param(0));
      }
      case Family::Gaussian: {
        const double mu = d.param(0);
        const double s = std::sqrt(d.param(1));
        const double alpha = (iv.lo - mu) / s;
        const double beta = (iv.hi - mu) / s;
        return mu * std_mass(alpha, beta) + s * (std_pdf(alpha) - std_pdf(beta));
      }
      default: break;
    }
  }
  return quadrature_raw(d, iv).m1;
}

double centroid(const DensitySpec& d, Interval iv, IntegrationMethod m) {
  check_interval(iv);
  if (!d.is_bound()) d.pdf(0.0);
  const double floor = kMassFloorPerWidth * iv.width();
  if (m == IntegrationMethod::Auto) {
    switch (d.family()) {
      case Family::Uniform: {
        const Interval c = clip(iv, d.support());
        const double mm = c.hi > c.lo ? c.width() / (d.param(1) - d.param(0)) : 0.0;
        if (!(mm > floor)) empty_cell(d, iv, mm);
        return 0.5 * (c.lo + c.hi);
      }
      case Family::Gaussian:
        if (!(iv.hi > iv.lo)) empty_cell(d, iv, 0.0);
        return gaussian_centroid(d.param(0), std::sqrt(d.param(1)), iv.lo, iv.hi);
      default: break;
    }
  }
  if (iv.finite()) {
    const auto lm = local_moments(d, iv, IntegrationMethod::Quadrature);
    if (!(lm.m0 > floor)) empty_cell(d, iv, lm.m0);
    return std::clamp(lm.center + lm.half_width * lm.m1 / lm.m0, iv.lo, iv.hi);
  }
  const auto raw = quadrature_raw(d, iv);
  if (!(raw.m0 > 0.0)) empty_cell(d, iv, raw.m0);
  return std::clamp(raw.m1 / raw.m0, iv.lo, iv.hi);
}

LocalMoments local_moments(const DensitySpec& d, Interval iv, IntegrationMethod m) {
  check_interval(iv);
  if (!iv.finite()) throw Error(ErrorKind::InvalidArgument, "local_moments needs a finite interval");
  if (!d.is_bound()) d.pdf(0.0);
  LocalMoments out;
  out.center = 0.5 * (iv.lo + iv.hi);
  out.half_width = 0.5 * (iv.hi - iv.lo);
  if (!(out.half_width > 0.0)) return out;

  if (m == IntegrationMethod::Auto && d.family() == Family::Uniform) {
    const Interval c = clip(iv, d.support());
    if (!(c.hi > c.lo)) return out;
    const double q = 1.0 / (d.param(1) - d.param(0));
    const double h = out.half_width;
    const double tl = (c.lo - out.center) / h;
    const double tu = (c.hi - out.center) / h;
    out.m0 = q * h * (tu - tl);
    out.m1 = q * h * (tu * tu - tl * tl) * 0.5;
    out.m2 = q * h * (tu * tu * tu - tl * tl * tl) / 3.0;
    return out;
  }

  const Interval c = d.family() == Family::Gaussian ? iv : clip(iv, d.support());
  if (!(c.hi > c.lo)) return out;
  const quadrature::BatchFn f = [&d](std::span<const double> x, std::span<double> y) {
    d.pdf(x, y);
  };
  const auto q = quadrature::integrate_moments(f, c.lo, c.hi, out.center, out.half_width,
                                               default_quadrature_options());
  if (!q.converged)
    throw Error(ErrorKind::QuadratureNonConvergence,
                fmt::format("{} on [{}, {}]: error {:.3g} after {} subintervals", d.describe(),
                            iv.lo, iv.hi, q.abs_error, q.subintervals));
  out.m0 = q.m0;
  out.m1 = q.m1;
  out.m2 = q.m2;
  return out;
}

}  // namespace cvtalloc
