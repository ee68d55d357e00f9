#include <doctest.h>

#include "cvtalloc/config.hpp"
#include "cvtalloc/errors.hpp"

using namespace cvtalloc;
using namespace cvtalloc::config;
using nlohmann::json;

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

}  // namespace

TEST_CASE("density from JSON") {
  const auto g = density_from_json(json{{"family", "gaussian"}, {"mu", "free"}, {"sigma2", 4.0}});
  CHECK(g.family() == Family::Gaussian);
  CHECK(g.free_parameter() == std::optional<std::string_view>("mu"));
  CHECK(g.param("sigma2") == 4.0);
  CHECK(density_from_json(json{{"family", "gamma"}, {"k", 2}, {"theta", 3}}) == DensitySpec::gamma(2, 3));
  CHECK(density_from_json(json{{"family", "exponential"}, {"lambda", 0.5}}) == DensitySpec::exponential(0.5));
}

TEST_CASE("uniform bounds default to the domain") {
  const auto u = density_from_json(json{{"family", "uniform"}}, Domain1D{0, 15});
  CHECK(u == DensitySpec::uniform(0, 15));
  CHECK(density_from_json(json{{"family", "uniform"}, {"b", 4}}, Domain1D{0, 15}) == DensitySpec::uniform(0, 4));
  CHECK(kind_of([] { density_from_json(json{{"family", "uniform"}}); }) == ErrorKind::InvalidDensitySpec);
}

TEST_CASE("density JSON errors") {
  const json bad[] = {
      json::array(),
      json{{"mu", 1}},
      json{{"family", "cauchy"}},
      json{{"family", "gaussian"}, {"mu", 1}},
      json{{"family", "gaussian"}, {"mu", 1}, {"sigma2", 1}, {"lambda", 2}},
      json{{"family", "gaussian"}, {"mu", "free"}, {"sigma2", "free"}},
      json{{"family", "gaussian"}, {"mu", "x"}, {"sigma2", 1}},
      json{{"family", "gaussian"}, {"mu", 0}, {"sigma2", -1}},
  };
  for (const auto& j : bad) {
    INFO(j.dump());
    CHECK(kind_of([&] { density_from_json(j); }) == ErrorKind::InvalidDensitySpec);
  }
}

TEST_CASE("density JSON round trip") {
  for (const auto& d : {DensitySpec::gaussian(3, 2), DensitySpec::uniform(-1, 1), DensitySpec::exponential(1.5),
                        DensitySpec::gamma(2, 20), DensitySpec::gamma(2, 20).with_free("k")}) {
    const auto back = density_from_json(density_to_json(d));
    CHECK(back.family() == d.family());
    CHECK(back.free_parameter() == d.free_parameter());
    CHECK(density_to_json(back) == density_to_json(d));
  }
  CHECK(density_to_json(DensitySpec::gaussian(0, 4).with_free("mu"))["mu"] == "free");
}

TEST_CASE("shorthand density text") {
  const auto g = parse_density("gaussian:mu=free, sigma2=4");
  CHECK(g.free_parameter() == std::optional<std::string_view>("mu"));
  CHECK(g.param("sigma2") == 4.0);
  CHECK(parse_density("uniform", Domain1D{0, 15}) == DensitySpec::uniform(0, 15));
  CHECK(parse_density("exponential:lambda=0.25") == DensitySpec::exponential(0.25));
  CHECK(parse_density(R"({"family":"gamma","k":2,"theta":1})") == DensitySpec::gamma(2, 1));
  CHECK(kind_of([] { parse_density("gaussian:mu"); }) == ErrorKind::InvalidDensitySpec);
  CHECK(kind_of([] { parse_density("gaussian:mu=abc,sigma2=1"); }) == ErrorKind::InvalidDensitySpec);
  CHECK(kind_of([] { parse_density("{not json"); }) == ErrorKind::InvalidDensitySpec);
}

TEST_CASE("domain and list parsing") {
  const auto d = parse_domain("0, 100");
  CHECK(d.a == 0.0);
  CHECK(d.b == 100.0);
  CHECK(parse_domain("-2.5,1e2").a == -2.5);
  CHECK(kind_of([] { parse_domain("5,1"); }) == ErrorKind::InvalidDomain);
  CHECK(kind_of([] { parse_domain("1"); }) == ErrorKind::InvalidDomain);
  CHECK(kind_of([] { parse_domain("1,2,3"); }) == ErrorKind::InvalidDomain);
  CHECK(kind_of([] { parse_domain("a,b"); }) == ErrorKind::InvalidDomain);
  CHECK(parse_list("1, 2.5,3") == std::vector<double>{1, 2.5, 3});
  CHECK(parse_list("").empty());
  CHECK(kind_of([] { parse_list("1,,2"); }) == ErrorKind::InvalidArgument);
  CHECK(kind_of([] { parse_list("1,2x"); }) == ErrorKind::InvalidArgument);
}
