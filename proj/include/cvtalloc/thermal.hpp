#pragma once

// Three-state RC model of one building zone with its HVAC unit.
//
// State x = (indoor air, inner mass, envelope) temperatures. Input u is the
// HVAC power in watts, positive for heating. Disturbance w = (outdoor
// temperature, solar gain in watts). Temperatures are handled in degrees
// Celsius and time in seconds internally; the public setpoint and disturbance
// records use Fahrenheit and minutes.

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace cvtalloc::thermal {

inline double f_to_c(double f) { return (f - 32.0) * 5.0 / 9.0; }
inline double c_to_f(double c) { return c * 9.0 / 5.0 + 32.0; }

struct ThermalParams {
  double K1 = 16.48, K2 = 108.5, K3 = 5.0, K4 = 30.5, K5 = 23.04;  // W/K
  double C1 = 9.36e5, C2 = 2.97e6, C3 = 6.695e5;                  // J/K
};

/// Means and variances of the eight normal draws.
struct ParamDistribution {
  ThermalParams mean{};
  double k_variance = 0.1;
  double c_variance = 1.0;
};

/// Independent normal draws per parameter (mt19937_64 seeded with `seed`);
/// nonpositive draws are redrawn.
ThermalParams sample_parameters(std::uint64_t seed, const ParamDistribution& dist = {});

struct ContinuousModel {
  Eigen::Matrix3d A;
  Eigen::Vector3d B;
  Eigen::Matrix<double, 3, 2> G;
  Eigen::RowVector3d C;
  double D = 0.0;
};

/// Assembles A, B, G, C, D from the RC parameters. Throws InvalidParameterValue
/// for nonpositive parameters and NonHurwitz if A has an eigenvalue with
/// nonnegative real part.
ContinuousModel build_continuous_model(const ThermalParams& p);

struct DiscreteModel {
  Eigen::Matrix3d Ad;
  Eigen::Vector3d Bd;
  Eigen::Matrix<double, 3, 2> Gd;
  Eigen::RowVector3d C;
  double ts_minutes = 10.0;
};

/// Exact zero-order hold of (A, B) over ts seconds: returns (Ad, Bd) from the
/// exponential of the augmented matrix [[A, B], [0, 0]] * ts.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> zoh(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                                double ts_seconds);

DiscreteModel discretize_zoh(const ContinuousModel& m, double ts_minutes = 10.0);

struct ControllerGains {
  Eigen::RowVector3d K_fb = Eigen::RowVector3d::Zero();
  double N_r = 0.0;
  double setpoint_f = 72.0;
};

inline constexpr std::array<double, 3> kDefaultPoles{0.80, 0.85, 0.90};

/// Ackermann placement of eig(Ad - Bd K) at `poles` (inside the unit disk;
/// coincident poles are separated by 1e-6) and the static reference gain that
/// makes y track the setpoint with zero disturbance. Throws Uncontrollable
/// and InvalidArgument.
ControllerGains design_controller(const DiscreteModel& dm, std::array<double, 3> poles = kDefaultPoles,
                                  double setpoint_f = 72.0);

/// Reference gain for an existing feedback row.
double reference_gain(const DiscreteModel& dm, const Eigen::RowVector3d& K_fb);

struct PlantStep {
  Eigen::Vector3d x;
  double y_c = 0.0;  // indoor air temperature after the step, Celsius
};

/// x' = Ad x + Bd u + Gd w, y = C x'. w = (outdoor Celsius, solar watts).
PlantStep step_plant(const Eigen::Vector3d& x, double u, const Eigen::Vector2d& w, const DiscreteModel& dm);

/// u = -K x + N_r * setpoint (setpoint converted to Celsius).
double desired_power(const ControllerGains& g, const Eigen::Vector3d& x);

struct DisturbanceSample {
  double time_min = 0.0;
  double outdoor_f = 0.0;
  double solar_w = 0.0;
};

struct SyntheticWeather {
  double outdoor_mean_f = 55.0;
  double outdoor_amplitude_f = 10.0;
  double outdoor_peak_hour = 15.0;
  double solar_peak_w = 300.0;
  double sunrise_hour = 6.0;
  double sunset_hour = 18.0;
};

/// Piecewise-linear disturbance signal over time in minutes. Queries outside
/// the sampled range hold the nearest end value.
class Disturbance {
 public:
  explicit Disturbance(std::vector<DisturbanceSample> samples);

  /// Reads `time_min,outdoor_temp_F,solar_radiation_W` with a header row.
  /// Throws InvalidArgument for malformed rows or non-increasing times.
  static Disturbance from_csv(const std::filesystem::path& path);

  /// Diurnal sinusoid for the outdoor temperature and a half-rectified
  /// sinusoid for solar gain between sunrise and sunset, sampled every
  /// ts_minutes over [0, horizon_steps * ts_minutes].
  static Disturbance synthetic(const SyntheticWeather& w, int horizon_steps, double ts_minutes);

  DisturbanceSample at(double time_min) const;

  /// (outdoor Celsius, solar watts) at time_min.
  Eigen::Vector2d w(double time_min) const;

  const std::vector<DisturbanceSample>& samples() const { return samples_; }

 private:
  std::vector<DisturbanceSample> samples_;
};

}  // namespace cvtalloc::thermal
