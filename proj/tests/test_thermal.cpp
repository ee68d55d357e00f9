#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "cvtalloc/errors.hpp"
#include "cvtalloc/thermal.hpp"
#include "oracles.hpp"

using namespace cvtalloc;
using namespace cvtalloc::thermal;

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

DiscreteModel mean_plant() { return discretize_zoh(build_continuous_model(ThermalParams{})); }

std::vector<double> sorted_real_eigs(const Eigen::Matrix3d& m) {
  const Eigen::EigenSolver<Eigen::Matrix3d> es(m);
  std::vector<double> v;
  for (int i = 0; i < 3; ++i) {
    CHECK(std::fabs(es.eigenvalues()(i).imag()) < 1e-9);
    v.push_back(es.eigenvalues()(i).real());
  }
  std::sort(v.begin(), v.end());
  return v;
}

std::filesystem::path write_temp(const std::string& name, const std::string& body) {
  const auto p = std::filesystem::temp_directory_path() / name;
  std::ofstream(p) << body;
  return p;
}

}  // namespace

TEST_CASE("continuous model matches the hand-built matrices") {
  const auto m = build_continuous_model(ThermalParams{});
  const auto& o = oracle::kMeanRc;
  CHECK((m.A - o.A()).cwiseAbs().maxCoeff() < 1e-18);
  CHECK((m.B - o.B()).cwiseAbs().maxCoeff() < 1e-18);
  CHECK((m.G - o.G()).cwiseAbs().maxCoeff() < 1e-18);
  CHECK(m.C == Eigen::RowVector3d(1, 0, 0));
  CHECK(m.D == 0.0);
  CHECK(m.A(0, 0) == doctest::Approx(-1.635e-4).epsilon(1e-3));
  CHECK(m.A.row(1).sum() == 0.0);
  for (double e : sorted_real_eigs(m.A)) CHECK(e < 0.0);
}

TEST_CASE("invalid parameters are rejected") {
  ThermalParams p;
  p.K3 = 0.0;
  CHECK(kind_of([&] { build_continuous_model(p); }) == ErrorKind::InvalidParameterValue);
  p = {};
  p.C2 = -1.0;
  CHECK(kind_of([&] { build_continuous_model(p); }) == ErrorKind::InvalidParameterValue);
}

TEST_CASE("zero-order hold limit cases") {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(1, 1);
  Eigen::MatrixXd B = Eigen::MatrixXd::Constant(1, 1, 3.0);
  const auto [Ad, Bd] = zoh(A, B, 600.0);
  CHECK(Ad(0, 0) == doctest::Approx(1.0));
  CHECK(Bd(0, 0) == doctest::Approx(1800.0));

  const auto m = build_continuous_model(ThermalParams{});
  const double h = 1e-2;
  const auto [Ah, Bh] = zoh(m.A, m.B, h);
  const Eigen::Matrix3d first = Eigen::Matrix3d::Identity() + m.A * h;
  CHECK((Ah - first).cwiseAbs().maxCoeff() < 10.0 * (m.A * h).squaredNorm());
  CHECK(kind_of([&] { discretize_zoh(m, 0.0); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("discrete model is stable at the mean parameters") {
  const auto dm = mean_plant();
  CHECK(dm.ts_minutes == 10.0);
  const Eigen::EigenSolver<Eigen::Matrix3d> es(dm.Ad);
  CHECK(es.eigenvalues().cwiseAbs().maxCoeff() < 1.0);
}

TEST_CASE("property: zero-order hold agrees with fine RK4 over one sample") {
  const auto m = build_continuous_model(ThermalParams{});
  const auto dm = discretize_zoh(m);
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> temp(-10.0, 35.0), power(-5000.0, 5000.0), solar(0.0, 800.0);
  for (int t = 0; t < 25; ++t) {
    const Eigen::Vector3d x(temp(rng), temp(rng), temp(rng));
    const double u = power(rng);
    const Eigen::Vector2d w(temp(rng), solar(rng));
    const Eigen::Vector3d ref = oracle::rk4(m.A, m.B, m.G, x, u, w, 600.0, 1000);
    const auto got = step_plant(x, u, w, dm);
    CHECK((got.x - ref).norm() <= 1e-6 * ref.norm());
    CHECK(got.y_c == got.x(0));
  }
}

TEST_CASE("step_plant is linear") {
  const auto dm = mean_plant();
  CHECK(step_plant(Eigen::Vector3d::Zero(), 0.0, Eigen::Vector2d::Zero(), dm).x == Eigen::Vector3d::Zero());
  const Eigen::Vector3d x(20, 21, 15);
  const Eigen::Vector2d w(5, 200);
  const auto a = step_plant(x, 1200.0, w, dm);
  const auto b = step_plant(x, 1200.0 + 800.0, w, dm);
  CHECK(((b.x - a.x) - dm.Bd * 800.0).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("constant inputs settle at the continuous steady state") {
  const auto m = build_continuous_model(ThermalParams{});
  const auto dm = discretize_zoh(m);
  const double u = 1500.0;
  const Eigen::Vector2d w(4.0, 250.0);
  const Eigen::Vector3d ss = -m.A.fullPivLu().solve(m.B * u + m.G * w);
  Eigen::Vector3d x = Eigen::Vector3d::Zero();
  for (int k = 0; k < 20000; ++k) x = step_plant(x, u, w, dm).x;
  CHECK(std::fabs(x(0) - ss(0)) < 1e-8 * std::fabs(ss(0)));
}

TEST_CASE("pole placement at the default poles") {
  const auto dm = mean_plant();
  const auto g = design_controller(dm);
  const auto eig = sorted_real_eigs(dm.Ad - dm.Bd * g.K_fb);
  for (int i = 0; i < 3; ++i) CHECK(std::fabs(eig[i] - kDefaultPoles[i]) < 1e-8);
  // Unit DC gain from setpoint to y with no disturbance.
  const Eigen::Matrix3d cl = Eigen::Matrix3d::Identity() - dm.Ad + dm.Bd * g.K_fb;
  const double dc = g.N_r * (dm.C * cl.fullPivLu().solve(dm.Bd))(0);
  CHECK(std::fabs(dc - 1.0) < 1e-8);
  CHECK(g.N_r > 0.0);
}

TEST_CASE("placing at the open-loop eigenvalues needs no feedback") {
  const auto dm = mean_plant();
  const auto ev = sorted_real_eigs(dm.Ad);
  const auto g = design_controller(dm, {ev[0], ev[1], ev[2]});
  CHECK(g.K_fb.cwiseAbs().maxCoeff() < 1e-6 * std::max(1.0, g.N_r));
}

TEST_CASE("duplicate poles are separated") {
  const auto dm = mean_plant();
  const auto g = design_controller(dm, {0.9, 0.9, 0.85});
  const Eigen::EigenSolver<Eigen::Matrix3d> es(dm.Ad - dm.Bd * g.K_fb);
  for (int i = 0; i < 3; ++i) {
    const auto e = es.eigenvalues()(i);
    CHECK(std::min(std::abs(e - 0.9), std::abs(e - 0.85)) < 1e-4);
  }
  CHECK(kind_of([&] { design_controller(dm, {0.9, 1.0, 0.8}); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("uncontrollable pair is reported") {
  auto dm = mean_plant();
  dm.Bd = Eigen::Vector3d::Zero();
  CHECK(kind_of([&] { design_controller(dm); }) == ErrorKind::Uncontrollable);
}

TEST_CASE("closed loop regulates to the setpoint") {
  const auto dm = mean_plant();
  const auto g = design_controller(dm, kDefaultPoles, 72.0);
  Eigen::Vector3d x = Eigen::Vector3d::Constant(f_to_c(60.0));
  int reached = -1;
  for (int k = 1; k <= 100; ++k) {
    const auto s = step_plant(x, desired_power(g, x), Eigen::Vector2d::Zero(), dm);
    x = s.x;
    if (std::fabs(c_to_f(s.y_c) - 72.0) <= 0.1) {
      if (reached < 0) reached = k;
    } else {
      reached = -1;
    }
  }
  CHECK(reached > 0);
  for (int k = 0; k < 400; ++k) x = step_plant(x, desired_power(g, x), Eigen::Vector2d::Zero(), dm).x;
  CHECK(std::fabs(c_to_f(x(0)) - 72.0) < 1e-6);
}

TEST_CASE("desired power") {
  const auto dm = mean_plant();
  auto g = design_controller(dm, kDefaultPoles, 72.0);
  const Eigen::Vector3d x(20, 20, 15);
  auto warmer = g;
  warmer.setpoint_f = 76.0;
  CHECK(desired_power(warmer, x) > desired_power(g, x));
  // At the closed-loop equilibrium the input holds y at the setpoint.
  const Eigen::Matrix3d cl = Eigen::Matrix3d::Identity() - dm.Ad + dm.Bd * g.K_fb;
  const Eigen::Vector3d xe = cl.fullPivLu().solve(dm.Bd * g.N_r * f_to_c(72.0));
  const double ue = desired_power(g, xe);
  const auto s = step_plant(xe, ue, Eigen::Vector2d::Zero(), dm);
  CHECK((s.x - xe).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(c_to_f(s.y_c) == doctest::Approx(72.0).epsilon(1e-12));
  CHECK(desired_power(ControllerGains{}, x) == 0.0);
}

TEST_CASE("parameter sampling") {
  CHECK(sample_parameters(5).K1 == sample_parameters(5).K1);
  CHECK(sample_parameters(5).C3 == sample_parameters(5).C3);
  CHECK(sample_parameters(5).K2 != sample_parameters(6).K2);

  ParamDistribution exact;
  exact.k_variance = 0.0;
  exact.c_variance = 0.0;
  const auto p = sample_parameters(99, exact);
  const ThermalParams m;
  CHECK(p.K1 == m.K1);
  CHECK(p.K5 == m.K5);
  CHECK(p.C2 == m.C2);

  double sum = 0.0, sq = 0.0;
  for (std::uint64_t s = 0; s < 1000; ++s) {
    const double k1 = sample_parameters(s).K1;
    sum += k1;
    sq += k1 * k1;
  }
  const double mean = sum / 1000.0;
  CHECK(std::fabs(mean - 16.48) < 0.05);
  CHECK(std::fabs(sq / 1000.0 - mean * mean - 0.1) < 0.03);
}

TEST_CASE("property: sampled plants are stable") {
  for (std::uint64_t s = 0; s < 1000; ++s) {
    const auto dm = discretize_zoh(build_continuous_model(sample_parameters(s)));
    const Eigen::EigenSolver<Eigen::Matrix3d> es(dm.Ad);
    CHECK(es.eigenvalues().cwiseAbs().maxCoeff() < 1.0);
  }
}

TEST_CASE("unit conversion") {
  CHECK(f_to_c(32.0) == 0.0);
  CHECK(f_to_c(212.0) == doctest::Approx(100.0));
  CHECK(c_to_f(f_to_c(72.0)) == doctest::Approx(72.0).epsilon(1e-15));
}

TEST_CASE("disturbance interpolation") {
  const Disturbance d({{0, 40, 0}, {10, 50, 100}, {30, 50, 300}});
  CHECK(d.at(5).outdoor_f == doctest::Approx(45.0));
  CHECK(d.at(5).solar_w == doctest::Approx(50.0));
  CHECK(d.at(20).solar_w == doctest::Approx(200.0));
  CHECK(d.at(-3).outdoor_f == 40.0);
  CHECK(d.at(99).solar_w == 300.0);
  CHECK(d.w(10)(0) == doctest::Approx(10.0));
  CHECK(kind_of([] { Disturbance({}); }) == ErrorKind::InvalidArgument);
  CHECK(kind_of([] { Disturbance({{0, 1, 1}, {0, 2, 2}}); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("disturbance csv") {
  const auto ok = write_temp("cvtalloc_dist_ok.csv",
                             "time_min,outdoor_temp_F,solar_radiation_W\n0,40,0\n10, 42 ,120\n20,44,240\n");
  const auto d = Disturbance::from_csv(ok);
  REQUIRE(d.samples().size() == 3);
  CHECK(d.samples()[1].outdoor_f == 42.0);
  CHECK(d.at(15).solar_w == doctest::Approx(180.0));

  const auto bad_header = write_temp("cvtalloc_dist_h.csv", "t,T,S\n0,1,2\n");
  const auto short_row = write_temp("cvtalloc_dist_s.csv", "time_min,outdoor_temp_F,solar_radiation_W\n0,1\n");
  const auto not_number = write_temp("cvtalloc_dist_n.csv", "time_min,outdoor_temp_F,solar_radiation_W\n0,x,2\n");
  const auto backwards =
      write_temp("cvtalloc_dist_b.csv", "time_min,outdoor_temp_F,solar_radiation_W\n10,1,2\n0,1,2\n");
  for (const auto& p : {bad_header, short_row, not_number, backwards})
    CHECK(kind_of([&] { Disturbance::from_csv(p); }) == ErrorKind::InvalidArgument);
  CHECK(kind_of([] { Disturbance::from_csv("/nonexistent/weather.csv"); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("synthetic weather") {
  SyntheticWeather w;
  const auto d = Disturbance::synthetic(w, 144, 10.0);
  REQUIRE(d.samples().size() == 145);
  CHECK(d.samples().back().time_min == 1440.0);
  // Peak outdoor temperature at 15:00, trough twelve hours away.
  CHECK(d.at(15 * 60).outdoor_f == doctest::Approx(w.outdoor_mean_f + w.outdoor_amplitude_f));
  CHECK(d.at(3 * 60).outdoor_f == doctest::Approx(w.outdoor_mean_f - w.outdoor_amplitude_f));
  CHECK(d.at(12 * 60).solar_w == doctest::Approx(w.solar_peak_w));
  CHECK(d.at(2 * 60).solar_w == 0.0);
  CHECK(d.at(20 * 60).solar_w == 0.0);
  for (const auto& s : d.samples()) CHECK(s.solar_w >= 0.0);
  CHECK(kind_of([&] { Disturbance::synthetic(w, -1, 10.0); }) == ErrorKind::InvalidArgument);
}
