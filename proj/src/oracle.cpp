#include "mavf/oracle.hpp"

#include "mavf/error.hpp"

#include <optional>
#include <stdexcept>

namespace mavf {

namespace {

Mat spd_inverse(const Mat& m, const char* what) {
  Eigen::LLT<Mat> llt(m);
  if (llt.info() != Eigen::Success) throw NumericError(what);
  return llt.solve(Mat::Identity(m.rows(), m.cols()));
}

std::optional<Measurement> linearize_all(const std::vector<Observation>& obs, const Vec& x_lin) {
  std::vector<Measurement> parts;
  for (const auto& o : obs) {
    if (auto m = linearize(o.sensor, x_lin, o.raw)) parts.push_back(std::move(*m));
  }
  if (parts.empty()) return std::nullopt;
  return stack_measurements(parts);
}

}  // namespace

double batch_objective(const BatchProblem& p, const std::vector<Vec>& trajectory) {
  if (static_cast<int>(trajectory.size()) != p.steps() + 1) {
    throw std::invalid_argument("batch_objective: trajectory length mismatch");
  }
  const Vec d0 = trajectory[0] - p.prior_mean;
  double total = d0.dot(p.prior_cov.llt().solve(d0));
  const auto Qllt = p.model.Q.llt();
  for (int l = 1; l <= p.steps(); ++l) {
    const Vec dyn = trajectory[l] - p.model.A * trajectory[l - 1];
    total += dyn.dot(Qllt.solve(dyn));
    for (const auto& o : p.observations[l - 1]) {
      Vec e = o.raw - sensor_function(o.sensor, trajectory[l]);
      if (o.sensor.kind == SensorKind::kDoa) e(0) = wrap_angle(e(0));
      const double var = o.sensor.noise_std * o.sensor.noise_std;
      total += e.squaredNorm() / var;
    }
  }
  return total;
}

BatchSolution solve_batch_map(const BatchProblem& p) {
  const int n = static_cast<int>(p.prior_mean.size());
  const int k = p.steps();
  const int N = n * (k + 1);
  const Mat prior_info = spd_inverse(p.prior_cov, "solve_batch_map: prior covariance not PD");
  const Mat Qi = spd_inverse(p.model.Q, "solve_batch_map: process noise not PD");
  const Mat& A = p.model.A;

  BatchSolution sol;
  sol.states.resize(k + 1);
  sol.states[0] = p.prior_mean;
  for (int l = 1; l <= k; ++l) sol.states[l] = A * sol.states[l - 1];

  constexpr int kMaxIterations = 50;
  for (int it = 0; it < kMaxIterations; ++it) {
    Mat info = Mat::Zero(N, N);
    Vec eta = Vec::Zero(N);
    info.topLeftCorner(n, n) += prior_info;
    eta.head(n) += prior_info * p.prior_mean;
    for (int l = 1; l <= k; ++l) {
      const int a = (l - 1) * n;
      const int b = l * n;
      // ||x_l - A x_{l-1}||^2_{Q^-1}
      info.block(a, a, n, n) += A.transpose() * Qi * A;
      info.block(a, b, n, n) -= A.transpose() * Qi;
      info.block(b, a, n, n) -= Qi * A;
      info.block(b, b, n, n) += Qi;
      if (auto m = linearize_all(p.observations[l - 1], sol.states[l])) {
        const Mat Ri = spd_inverse(m->R, "solve_batch_map: measurement covariance not PD");
        info.block(b, b, n, n) += m->H.transpose() * Ri * m->H;
        eta.segment(b, n) += m->H.transpose() * Ri * m->pseudo_obs;
      }
    }
    info = symmetrize(info);
    Eigen::LLT<Mat> llt(info);
    if (llt.info() != Eigen::Success) throw NumericError("solve_batch_map: singular normal equations");
    const Vec x = llt.solve(eta);

    double change = 0.0;
    for (int l = 0; l <= k; ++l) {
      change = std::max(change, (x.segment(l * n, n) - sol.states[l]).norm());
      sol.states[l] = x.segment(l * n, n);
    }
    sol.cov = symmetrize(llt.solve(Mat::Identity(N, N)));
    sol.iterations = it + 1;
    if (change <= 1e-10 * (1.0 + x.norm())) break;
  }
  return sol;
}

std::vector<FilterStep> centralized_kf(const BatchProblem& p) {
  std::vector<FilterStep> out;
  out.reserve(p.steps() + 1);
  FilterStep cur{p.prior_mean, p.prior_cov};
  out.push_back(cur);
  const int n = static_cast<int>(p.prior_mean.size());
  for (int l = 1; l <= p.steps(); ++l) {
    cur.mean = p.model.A * cur.mean;
    cur.cov = symmetrize(p.model.A * cur.cov * p.model.A.transpose() + p.model.Q);
    if (auto m = linearize_all(p.observations[l - 1], cur.mean)) {
      const Mat S = m->H * cur.cov * m->H.transpose() + m->R;
      const Mat K = S.llt().solve(m->H * cur.cov).transpose();
      cur.mean += K * (m->pseudo_obs - m->H * cur.mean);
      const Mat I_KH = Mat::Identity(n, n) - K * m->H;
      cur.cov = symmetrize(I_KH * cur.cov * I_KH.transpose() + K * m->R * K.transpose());
    }
    out.push_back(cur);
  }
  return out;
}

std::vector<RollingWindow> centralized_rwt(const BatchProblem& p, int horizon) {
  if (horizon < 1) throw std::invalid_argument("centralized_rwt: horizon must be >= 1");
  std::vector<RollingWindow> out;
  out.reserve(p.steps());
  RollingWindow w = initial_window(horizon, p.prior_mean, p.prior_cov);
  for (int l = 1; l <= p.steps(); ++l) {
    w = advance_window(w, p.model);
    const auto meas = linearize_all(p.observations[l - 1], w.tail());
    const StackedSystem sys = build_stacked(p.model, meas, w);
    const Mat info = sys.information();
    Eigen::LLT<Mat> llt(info);
    if (llt.info() != Eigen::Success) throw NumericError("centralized_rwt: singular window system");
    w.mean = llt.solve(sys.information_vector());
    w.cov = symmetrize(llt.solve(Mat::Identity(info.rows(), info.cols())));
    out.push_back(w);
  }
  return out;
}

}  // namespace mavf
