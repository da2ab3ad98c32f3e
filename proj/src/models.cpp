#include "mavf/models.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace mavf {

namespace {

constexpr double kDegenerateDistance = 1e-9;

Vec standard_normal(int n, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec z(n);
  for (int i = 0; i < n; ++i) z(i) = normal(rng);
  return z;
}

Eigen::Vector2d offset(const Sensor& sensor, const Vec& x) {
  return Eigen::Vector2d(x(kPosX) - sensor.position.x(), x(kPosY) - sensor.position.y());
}

}  // namespace

ProcessModel cv_model(double delta, double q_scale) {
  if (!(delta > 0.0) || !std::isfinite(delta)) {
    throw std::invalid_argument("cv_model: delta must be positive and finite");
  }
  if (!(q_scale >= 0.0) || !std::isfinite(q_scale)) {
    throw std::invalid_argument("cv_model: q_scale must be non-negative");
  }
  ProcessModel m;
  m.delta = delta;
  m.A = Mat::Identity(kStateDim, kStateDim);
  m.A(0, 1) = delta;
  m.A(2, 3) = delta;

  const double d2 = delta * delta;
  Eigen::Matrix2d axis;
  axis << d2 * delta / 3.0, d2 / 2.0,
          d2 / 2.0,         delta;
  m.Q = Mat::Zero(kStateDim, kStateDim);
  m.Q.block<2, 2>(0, 0) = q_scale * axis;
  m.Q.block<2, 2>(2, 2) = q_scale * axis;
  return m;
}

std::string_view to_string(SensorKind kind) {
  switch (kind) {
    case SensorKind::kToa: return "TOA";
    case SensorKind::kDoa: return "DOA";
    case SensorKind::kPosition: return "POSITION";
  }
  return "?";
}

std::optional<SensorKind> parse_sensor_kind(std::string_view name) {
  if (name == "TOA") return SensorKind::kToa;
  if (name == "DOA") return SensorKind::kDoa;
  if (name == "POSITION") return SensorKind::kPosition;
  return std::nullopt;
}

double wrap_angle(double a) {
  constexpr double pi = std::numbers::pi;
  double w = std::remainder(a, 2.0 * pi);  // [-pi, pi]
  if (w <= -pi) w += 2.0 * pi;
  return w;
}

Vec propagate_truth(const ProcessModel& model, const Vec& x, Rng& rng) {
  const int n = model.state_dim();
  Eigen::SelfAdjointEigenSolver<Mat> eig(model.Q);
  const Vec root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const Mat factor = eig.eigenvectors() * root.asDiagonal();
  return model.A * x + factor * standard_normal(n, rng);
}

Vec sensor_function(const Sensor& sensor, const Vec& x) {
  const Eigen::Vector2d d = offset(sensor, x);
  switch (sensor.kind) {
    case SensorKind::kToa: return Vec::Constant(1, d.norm());
    case SensorKind::kDoa: return Vec::Constant(1, std::atan2(d.x(), d.y()));
    case SensorKind::kPosition: return Vec(Eigen::Vector2d(x(kPosX), x(kPosY)));
  }
  return {};
}

std::optional<Mat> sensor_jacobian(const Sensor& sensor, const Vec& x) {
  const int n = static_cast<int>(x.size());
  Mat H = Mat::Zero(sensor.measurement_dim(), n);
  if (sensor.kind == SensorKind::kPosition) {
    H(0, kPosX) = 1.0;
    H(1, kPosY) = 1.0;
    return H;
  }
  const Eigen::Vector2d d = offset(sensor, x);
  const double dist = d.norm();
  if (dist < kDegenerateDistance) return std::nullopt;
  if (sensor.kind == SensorKind::kToa) {
    H(0, kPosX) = d.x() / dist;
    H(0, kPosY) = d.y() / dist;
  } else {
    // d/dx atan2(dx, dy) = dy / r^2, d/dy = -dx / r^2
    const double r2 = dist * dist;
    H(0, kPosX) = d.y() / r2;
    H(0, kPosY) = -d.x() / r2;
  }
  return H;
}

std::optional<Vec> measure(const Sensor& sensor, const Vec& x_true, Rng& rng) {
  const double dist = offset(sensor, x_true).norm();
  if (sensor.kind != SensorKind::kPosition) {
    if (dist > sensor.sensing_range || dist < kDegenerateDistance) return std::nullopt;
  } else if (dist > sensor.sensing_range) {
    return std::nullopt;
  }
  Vec z = sensor_function(sensor, x_true) + sensor.noise_std * standard_normal(sensor.measurement_dim(), rng);
  if (sensor.kind == SensorKind::kDoa) z(0) = wrap_angle(z(0));
  return z;
}

std::optional<Measurement> linearize(const Sensor& sensor, const Vec& x_lin, const Vec& raw) {
  auto H = sensor_jacobian(sensor, x_lin);
  if (!H) return std::nullopt;
  Vec residual = raw - sensor_function(sensor, x_lin);
  if (sensor.kind == SensorKind::kDoa) residual(0) = wrap_angle(residual(0));

  Measurement m;
  m.sensor_id = sensor.id;
  m.value = raw;
  m.H = std::move(*H);
  const int dim = sensor.measurement_dim();
  m.R = Mat::Identity(dim, dim) * (sensor.noise_std * sensor.noise_std);
  m.pseudo_obs = residual + m.H * x_lin;
  return m;
}

Measurement stack_measurements(std::span<const Measurement> parts) {
  if (parts.empty()) throw std::invalid_argument("stack_measurements: nothing to stack");
  Eigen::Index rows = 0;
  const Eigen::Index cols = parts.front().H.cols();
  for (const auto& p : parts) {
    if (p.H.cols() != cols) throw std::invalid_argument("stack_measurements: state dimension mismatch");
    rows += p.H.rows();
  }
  Measurement out;
  out.sensor_id = -1;
  out.value.resize(rows);
  out.pseudo_obs.resize(rows);
  out.H.resize(rows, cols);
  out.R = Mat::Zero(rows, rows);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    const Eigen::Index m = p.H.rows();
    out.value.segment(at, m) = p.value;
    out.pseudo_obs.segment(at, m) = p.pseudo_obs;
    out.H.middleRows(at, m) = p.H;
    out.R.block(at, at, m, m) = p.R;
    at += m;
  }
  return out;
}

}  // namespace mavf
