#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "cvtalloc/density.hpp"
#include "cvtalloc/errors.hpp"
#include "oracles.hpp"

using namespace cvtalloc;

namespace {

ErrorKind kind_of(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected cvtalloc::Error");
  return ErrorKind::InvalidArgument;
}

constexpr double inf = std::numeric_limits<double>::infinity();

}  // namespace

TEST_CASE("mass of simple intervals") {
  CHECK(mass(DensitySpec::uniform(0, 15), {0, 5}) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(mass(DensitySpec::gaussian(0, 1), {-inf, 0}) == doctest::Approx(0.5).epsilon(1e-14));
  // Lower incomplete gamma for k = 2: 1 - (1 + x) e^-x.
  const double expected = 1.0 - 2.0 * std::exp(-1.0);
  CHECK(std::fabs(mass(DensitySpec::gamma(2, 1), {0, 1}) - expected) < 1e-10);
  CHECK(std::fabs(oracle::simpson([](double x) { return oracle::gamma_pdf(x, 2, 1); }, 0, 1) - expected) < 1e-12);
}

TEST_CASE("first moments") {
  CHECK(first_moment(DensitySpec::uniform(0, 1), {0, 1}) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(std::fabs(first_moment(DensitySpec::gaussian(0, 1), {-inf, inf})) < 1e-12);
  CHECK(first_moment(DensitySpec::exponential(2), {0, inf}) == doctest::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("centroids") {
  CHECK(centroid(DensitySpec::uniform(-3, 9), {1, 4}) == doctest::Approx(2.5).epsilon(1e-14));
  CHECK(centroid(DensitySpec::gaussian(7, 3), {5, 9}) == doctest::Approx(7.0).epsilon(1e-13));
  const double half_normal = std::sqrt(2.0 / std::numbers::pi);
  CHECK(std::fabs(centroid(DensitySpec::gaussian(0, 1), {0, inf}) - half_normal) < 1e-12);
  const double simpson = oracle::centroid([](double x) { return oracle::normal_pdf(x, 0, 1); }, 0, 40, 200000);
  CHECK(std::fabs(simpson - half_normal) < 1e-9);
}

TEST_CASE("far-tail gaussian cells still have a centroid") {
  const auto d = DensitySpec::gaussian(0, 1);
  const double c = centroid(d, {40, 41});
  CHECK(c > 40.0);
  CHECK(c < 40.1);
  CHECK(kind_of([&] { centroid(d, {3, 3}); }) == ErrorKind::EmptyCell);
}

TEST_CASE("centroid of an exponential cell matches Simpson") {
  const auto d = DensitySpec::exponential(0.3);
  const double c = centroid(d, {2, 11});
  const double ref = oracle::centroid([](double x) { return oracle::exponential_pdf(x, 0.3); }, 2, 11);
  CHECK(std::fabs(c - ref) < 1e-10);
}

TEST_CASE("binding the free parameter") {
  const auto g = DensitySpec::gaussian(0, 4).with_free("mu");
  CHECK(g.free_parameter() == std::optional<std::string_view>("mu"));
  CHECK(bind_free_parameter(g, 50.0) == DensitySpec::gaussian(50, 4));
  CHECK(bind_free_parameter(DensitySpec::exponential(1).with_free("lambda"), 0.1) == DensitySpec::exponential(0.1));
  CHECK(kind_of([&] { DensitySpec::gaussian(0, -1); }) == ErrorKind::InvalidParameterValue);
  const auto sigma_free = DensitySpec::gaussian(0, 1).with_free("sigma2");
  CHECK(kind_of([&] { bind_free_parameter(sigma_free, -1.0); }) == ErrorKind::InvalidParameterValue);
  CHECK(kind_of([&] { bind_free_parameter(DensitySpec::gaussian(0, 1), 2.0); }) == ErrorKind::NoFreeParameter);
  CHECK(kind_of([&] { g.param("mu"); }) == ErrorKind::UnboundFreeParameter);
  CHECK(kind_of([&] { mass(g, {0, 1}); }) == ErrorKind::UnboundFreeParameter);
}

TEST_CASE("invalid specs are rejected") {
  CHECK(kind_of([] { DensitySpec::uniform(2, 1); }) == ErrorKind::InvalidParameterValue);
  CHECK(kind_of([] { DensitySpec::exponential(0); }) == ErrorKind::InvalidParameterValue);
  CHECK(kind_of([] { DensitySpec::gamma(-1, 1); }) == ErrorKind::InvalidParameterValue);
  CHECK(kind_of([] { DensitySpec::gaussian(0, 1).with_free("theta"); }) == ErrorKind::InvalidDensitySpec);
}

TEST_CASE("pdf values agree with closed forms") {
  CHECK(DensitySpec::gaussian(1, 2).pdf(0.3) == doctest::Approx(oracle::normal_pdf(0.3, 1, 2)).epsilon(1e-14));
  CHECK(DensitySpec::exponential(2).pdf(0.7) == doctest::Approx(oracle::exponential_pdf(0.7, 2)).epsilon(1e-14));
  CHECK(DensitySpec::gamma(2.5, 3).pdf(4.0) == doctest::Approx(oracle::gamma_pdf(4.0, 2.5, 3)).epsilon(1e-13));
  CHECK(DensitySpec::uniform(0, 4).pdf(5.0) == 0.0);
  CHECK(DensitySpec::exponential(2).pdf(-1.0) == 0.0);
}

TEST_CASE("property: mass is additive") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 30.0);
  const DensitySpec specs[] = {DensitySpec::uniform(0, 30), DensitySpec::gaussian(12, 9), DensitySpec::exponential(0.2),
                               DensitySpec::gamma(2.5, 3)};
  for (const auto& d : specs)
    for (int t = 0; t < 200; ++t) {
      double p[3] = {u(rng), u(rng), u(rng)};
      std::sort(p, p + 3);
      const double whole = mass(d, {p[0], p[2]});
      const double parts = mass(d, {p[0], p[1]}) + mass(d, {p[1], p[2]});
      CHECK(std::fabs(whole - parts) <= 10.0 * std::max(1e-12, 1e-10 * whole));
    }
}

TEST_CASE("property: centroid lies inside its interval") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 50.0);
  const DensitySpec specs[] = {DensitySpec::gaussian(20, 4), DensitySpec::exponential(0.1), DensitySpec::gamma(3, 2),
                               DensitySpec::uniform(0, 50)};
  for (const auto& d : specs)
    for (int t = 0; t < 200; ++t) {
      double lo = u(rng), hi = u(rng);
      if (lo > hi) std::swap(lo, hi);
      if (hi - lo < 1e-6) continue;
      const double c = centroid(d, {lo, hi});
      CHECK(c >= lo);
      CHECK(c <= hi);
    }
}

TEST_CASE("property: closed forms agree with quadrature") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  const auto g = DensitySpec::gaussian(0.5, 3);
  const auto un = DensitySpec::uniform(-10, 10);
  for (int t = 0; t < 1000; ++t) {
    double lo = u(rng), hi = u(rng);
    if (lo > hi) std::swap(lo, hi);
    for (const auto& d : {g, un}) {
      const double ma = mass(d, {lo, hi}, IntegrationMethod::Auto);
      const double mq = mass(d, {lo, hi}, IntegrationMethod::Quadrature);
      const double fa = first_moment(d, {lo, hi}, IntegrationMethod::Auto);
      const double fq = first_moment(d, {lo, hi}, IntegrationMethod::Quadrature);
      CHECK(std::fabs(ma - mq) < 1e-10);
      CHECK(std::fabs(fa - fq) < 1e-10);
    }
  }
}

TEST_CASE("property: gaussian centroids translate with the mean") {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int t = 0; t < 500; ++t) {
    const double mu = u(rng), delta = u(rng);
    double lo = u(rng), hi = u(rng);
    if (lo > hi) std::swap(lo, hi);
    if (hi - lo < 1e-3) continue;
    const double c0 = centroid(DensitySpec::gaussian(mu, 2), {lo, hi});
    const double c1 = centroid(DensitySpec::gaussian(mu + delta, 2), {lo + delta, hi + delta});
    CHECK(std::fabs(c1 - (c0 + delta)) < 1e-10);
  }
}

TEST_CASE("local moments reproduce the second moment about a point") {
  const auto d = DensitySpec::gamma(2, 5);
  const Interval iv{3, 17};
  const auto lm = local_moments(d, iv);
  for (double p : {3.0, 8.0, 16.0}) {
    const double ref = oracle::simpson([&](double x) { return (x - p) * (x - p) * oracle::gamma_pdf(x, 2, 5); }, 3, 17);
    CHECK(std::fabs(lm.second_moment_about(p) - ref) < 1e-10 * std::max(1.0, ref));
  }
}
