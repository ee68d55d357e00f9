#include "cvtalloc/thermal.hpp"

#include <fmt/format.h>

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <unsupported/Eigen/MatrixFunctions>

#include "cvtalloc/errors.hpp"

namespace cvtalloc::thermal {
namespace {

double draw_positive(std::mt19937_64& rng, double mean, double variance) {
  if (variance == 0.0) return mean;
  if (!(variance > 0.0)) throw Error(ErrorKind::InvalidArgument, "parameter variance must be nonnegative");
  std::normal_distribution<double> nd(mean, std::sqrt(variance));
  for (int tries = 0; tries < 1000; ++tries) {
    const double v = nd(rng);
    if (v > 0.0) return v;
  }
  throw Error(ErrorKind::InvalidArgument, fmt::format("could not draw a positive value from N({}, {})", mean, variance));
}

std::string trim(std::string s) {
  const auto ws = [](unsigned char c) { return std::isspace(c) != 0; };
  s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), ws));
  s.erase(std::find_if_not(s.rbegin(), s.rend(), ws).base(), s.end());
  return s;
}

}  // namespace

ThermalParams sample_parameters(std::uint64_t seed, const ParamDistribution& dist) {
  std::mt19937_64 rng(seed);
  const auto& m = dist.mean;
  ThermalParams p;
  p.K1 = draw_positive(rng, m.K1, dist.k_variance);
  p.K2 = draw_positive(rng, m.K2, dist.k_variance);
  p.K3 = draw_positive(rng, m.K3, dist.k_variance);
  p.K4 = draw_positive(rng, m.K4, dist.k_variance);
  p.K5 = draw_positive(rng, m.K5, dist.k_variance);
  p.C1 = draw_positive(rng, m.C1, dist.c_variance);
  p.C2 = draw_positive(rng, m.C2, dist.c_variance);
  p.C3 = draw_positive(rng, m.C3, dist.c_variance);
  return p;
}

ContinuousModel build_continuous_model(const ThermalParams& p) {
  for (double v : {p.K1, p.K2, p.K3, p.K4, p.K5, p.C1, p.C2, p.C3})
    if (!(v > 0.0) || !std::isfinite(v))
      throw Error(ErrorKind::InvalidParameterValue, "thermal parameters must be positive and finite");
  ContinuousModel m;
  m.A << -(p.K1 + p.K2 + p.K3 + p.K5) / p.C1, (p.K1 + p.K2) / p.C1, p.K5 / p.C1,
      (p.K1 + p.K2) / p.C2, -(p.K1 + p.K2) / p.C2, 0.0,
      p.K1 / p.C3, 0.0, -(p.K4 + p.K5) / p.C3;
  m.B << 1.0 / p.C1 + 1.0 / p.C2, 0.0, 0.0;
  m.G << p.K3 / p.C1, 1.0 / p.C1,
      0.0, 1.0 / p.C2,
      p.K4 / p.C3, 0.0;
  m.C << 1.0, 0.0, 0.0;
  m.D = 0.0;
  const Eigen::EigenSolver<Eigen::Matrix3d> es(m.A, false);
  for (const auto& ev : es.eigenvalues())
    if (!(ev.real() < 0.0))
      throw Error(ErrorKind::NonHurwitz, fmt::format("A has eigenvalue {:.6g}{:+.6g}i", ev.real(), ev.imag()));
  return m;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> zoh(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                                double ts) {
  if (!(ts > 0.0)) throw Error(ErrorKind::InvalidArgument, "sample time must be positive");
  const Eigen::Index n = A.rows();
  const Eigen::Index m = B.cols();
  Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(n + m, n + m);
  aug.topLeftCorner(n, n) = A * ts;
  aug.topRightCorner(n, m) = B * ts;
  const Eigen::MatrixXd e = aug.exp();
  return {e.topLeftCorner(n, n), e.topRightCorner(n, m)};
}

DiscreteModel discretize_zoh(const ContinuousModel& m, double ts_minutes) {
  Eigen::Matrix<double, 3, 3> inputs;
  inputs << m.B, m.G;
  const auto [ad, bd] = zoh(m.A, inputs, ts_minutes * 60.0);
  DiscreteModel dm;
  dm.Ad = ad;
  dm.Bd = bd.col(0);
  dm.Gd = bd.rightCols(2);
  dm.C = m.C;
  dm.ts_minutes = ts_minutes;
  return dm;
}

double reference_gain(const DiscreteModel& dm, const Eigen::RowVector3d& K_fb) {
  const Eigen::Matrix3d cl = Eigen::Matrix3d::Identity() - dm.Ad + dm.Bd * K_fb;
  const double dc = dm.C * cl.fullPivLu().solve(dm.Bd);
  if (!std::isfinite(dc) || dc == 0.0) throw Error(ErrorKind::Uncontrollable, "closed loop has zero DC gain");
  return 1.0 / dc;
}

ControllerGains design_controller(const DiscreteModel& dm, std::array<double, 3> poles, double setpoint_f) {
  for (double p : poles)
    if (!(std::fabs(p) < 1.0))
      throw Error(ErrorKind::InvalidArgument, fmt::format("pole {} is not inside the unit disk", p));
  // Coincident poles make the characteristic polynomial fine but the
  // eigenvalue check ill-posed; nudge them apart.
  for (std::size_t i = 1; i < poles.size(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (std::fabs(poles[i] - poles[j]) < 1e-6) poles[i] = poles[j] - 1e-6;

  Eigen::Matrix3d W;
  W << dm.Bd, dm.Ad * dm.Bd, dm.Ad * dm.Ad * dm.Bd;
  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(W);
  const auto sv = svd.singularValues();
  if (!(sv(2) > 1e-14 * sv(0)))
    throw Error(ErrorKind::Uncontrollable,
                fmt::format("controllability matrix is rank deficient (singular values {:.3g}, {:.3g}, {:.3g})", sv(0),
                            sv(1), sv(2)));

  const Eigen::Matrix3d I = Eigen::Matrix3d::Identity();
  const Eigen::Matrix3d phi = (dm.Ad - poles[0] * I) * (dm.Ad - poles[1] * I) * (dm.Ad - poles[2] * I);
  // K = e3' W^-1 phi(Ad): solve W' q = e3.
  const Eigen::Vector3d q = W.transpose().fullPivLu().solve(Eigen::Vector3d::UnitZ());
  ControllerGains g;
  g.K_fb = q.transpose() * phi;
  g.N_r = reference_gain(dm, g.K_fb);
  g.setpoint_f = setpoint_f;
  return g;
}

PlantStep step_plant(const Eigen::Vector3d& x, double u, const Eigen::Vector2d& w, const DiscreteModel& dm) {
  PlantStep s;
  s.x = dm.Ad * x + dm.Bd * u + dm.Gd * w;
  s.y_c = dm.C * s.x;
  return s;
}

double desired_power(const ControllerGains& g, const Eigen::Vector3d& x) {
  return -(g.K_fb * x)(0) + g.N_r * f_to_c(g.setpoint_f);
}

Disturbance::Disturbance(std::vector<DisturbanceSample> samples) : samples_(std::move(samples)) {
  if (samples_.empty()) throw Error(ErrorKind::InvalidArgument, "disturbance needs at least one sample");
  for (std::size_t i = 1; i < samples_.size(); ++i)
    if (!(samples_[i].time_min > samples_[i - 1].time_min))
      throw Error(ErrorKind::InvalidArgument,
                  fmt::format("disturbance times must increase (row {}: {})", i + 1, samples_[i].time_min));
}

Disturbance Disturbance::from_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::InvalidArgument, fmt::format("cannot open disturbance file {}", path.string()));
  std::string line;
  if (!std::getline(in, line) || trim(line) != "time_min,outdoor_temp_F,solar_radiation_W")
    throw Error(ErrorKind::InvalidArgument,
                fmt::format("{}: expected header time_min,outdoor_temp_F,solar_radiation_W", path.string()));
  std::vector<DisturbanceSample> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    std::stringstream ss(line);
    std::array<double, 3> v{};
    std::string cell;
    for (int c = 0; c < 3; ++c) {
      if (!std::getline(ss, cell, ','))
        throw Error(ErrorKind::InvalidArgument, fmt::format("{}:{}: expected 3 columns", path.string(), lineno));
      try {
        std::size_t used = 0;
        const std::string t = trim(cell);
        v[static_cast<std::size_t>(c)] = std::stod(t, &used);
        if (used != t.size()) throw std::invalid_argument(t);
      } catch (const std::exception&) {
        throw Error(ErrorKind::InvalidArgument, fmt::format("{}:{}: '{}' is not a number", path.string(), lineno, cell));
      }
    }
    if (std::getline(ss, cell, ','))
      throw Error(ErrorKind::InvalidArgument, fmt::format("{}:{}: expected 3 columns", path.string(), lineno));
    rows.push_back({v[0], v[1], v[2]});
  }
  return Disturbance(std::move(rows));
}

Disturbance Disturbance::synthetic(const SyntheticWeather& w, int horizon_steps, double ts_minutes) {
  if (horizon_steps < 0 || !(ts_minutes > 0.0))
    throw Error(ErrorKind::InvalidArgument, "synthetic disturbance needs horizon >= 0 and ts > 0");
  constexpr double pi = std::numbers::pi;
  std::vector<DisturbanceSample> rows;
  for (int k = 0; k <= horizon_steps; ++k) {
    const double t = k * ts_minutes;
    const double hour = std::fmod(t / 60.0, 24.0);
    DisturbanceSample s;
    s.time_min = t;
    s.outdoor_f = w.outdoor_mean_f + w.outdoor_amplitude_f * std::cos(2.0 * pi * (hour - w.outdoor_peak_hour) / 24.0);
    const double day = w.sunset_hour - w.sunrise_hour;
    s.solar_w = (hour > w.sunrise_hour && hour < w.sunset_hour)
                    ? w.solar_peak_w * std::sin(pi * (hour - w.sunrise_hour) / day)
                    : 0.0;
    rows.push_back(s);
  }
  return Disturbance(std::move(rows));
}

DisturbanceSample Disturbance::at(double t) const {
  if (t <= samples_.front().time_min) return {t, samples_.front().outdoor_f, samples_.front().solar_w};
  if (t >= samples_.back().time_min) return {t, samples_.back().outdoor_f, samples_.back().solar_w};
  const auto hi = std::upper_bound(samples_.begin(), samples_.end(), t,
                                   [](double v, const DisturbanceSample& s) { return v < s.time_min; });
  const auto lo = hi - 1;
  const double f = (t - lo->time_min) / (hi->time_min - lo->time_min);
  return {t, lo->outdoor_f + f * (hi->outdoor_f - lo->outdoor_f), lo->solar_w + f * (hi->solar_w - lo->solar_w)};
}

Eigen::Vector2d Disturbance::w(double t) const {
  const auto s = at(t);
  return {f_to_c(s.outdoor_f), s.solar_w};
}

}  // namespace cvtalloc::thermal
