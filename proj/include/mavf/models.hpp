#pragma once

#include <Eigen/Dense>

#include <optional>
#include <random>
#include <span>
#include <string_view>

namespace mavf {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Rng = std::mt19937_64;

// State layout for the planar nearly-constant-velocity target: [x, vx, y, vy].
inline constexpr int kStateDim = 4;
inline constexpr int kPosX = 0;
inline constexpr int kPosY = 2;

struct ProcessModel {
  Mat A;
  Mat Q;
  double delta = 1.0;

  int state_dim() const { return static_cast<int>(A.rows()); }
};

/// Nearly-constant-velocity model with sampling interval `delta`.
///
/// A has Δ on the position/velocity off-diagonals; Q is block-diagonal with
/// per-axis blocks [[Δ³/3, Δ²/2], [Δ²/2, Δ]] multiplied by `q_scale`.
/// Throws std::invalid_argument for delta <= 0 or q_scale < 0.
ProcessModel cv_model(double delta, double q_scale = 1.0);

enum class SensorKind {
  kToa,       // range [m]
  kDoa,       // bearing atan2(x - xs, y - ys) [rad]
  kPosition,  // direct (x, y) observation, linear; used for tests and oracles
};

std::string_view to_string(SensorKind kind);
std::optional<SensorKind> parse_sensor_kind(std::string_view name);

struct Sensor {
  int id = 0;
  SensorKind kind = SensorKind::kToa;
  Eigen::Vector2d position = Eigen::Vector2d::Zero();
  double noise_std = 1.0;
  double sensing_range = 1250.0;

  int measurement_dim() const { return kind == SensorKind::kPosition ? 2 : 1; }
};

struct Measurement {
  int sensor_id = 0;
  Vec value;       // raw observation
  Mat H;           // Jacobian at the linearization point
  Mat R;           // noise covariance
  Vec pseudo_obs;  // raw - h(x_lin) + H x_lin
};

/// Wraps an angle to (-pi, pi].
double wrap_angle(double a);

/// Draws A x + w with w ~ N(0, Q).
Vec propagate_truth(const ProcessModel& model, const Vec& x, Rng& rng);

/// Noise-free sensor map h(x).
Vec sensor_function(const Sensor& sensor, const Vec& x);

/// Analytic Jacobian of `sensor_function`; nullopt for degenerate geometry.
std::optional<Mat> sensor_jacobian(const Sensor& sensor, const Vec& x);

/// Noisy observation of `x_true`, or nullopt when the target is outside the
/// sensing range or coincident with the sensor.
std::optional<Vec> measure(const Sensor& sensor, const Vec& x_true, Rng& rng);

/// EKF linearization at `x_lin`. Returns nullopt for degenerate geometry,
/// which callers treat as "no measurement".
std::optional<Measurement> linearize(const Sensor& sensor, const Vec& x_lin, const Vec& raw);

/// Concatenates several measurements into one (stacked H, block-diagonal R).
Measurement stack_measurements(std::span<const Measurement> parts);

}  // namespace mavf
