#include "mavf/window.hpp"

#include "mavf/error.hpp"

#include <stdexcept>

namespace mavf {

namespace {

Mat spd_inverse(const Mat& m) {
  Eigen::LLT<Mat> llt(m);
  if (llt.info() != Eigen::Success) throw NumericError("weight block is not positive definite");
  return llt.solve(Mat::Identity(m.rows(), m.cols()));
}

}  // namespace

Mat symmetrize(const Mat& m) { return 0.5 * (m + m.transpose()); }

RollingWindow initial_window(int horizon, const Vec& prior_mean, const Mat& prior_cov) {
  if (horizon < 1) throw std::invalid_argument("initial_window: horizon must be >= 1");
  const int n = static_cast<int>(prior_mean.size());
  if (prior_cov.rows() != n || prior_cov.cols() != n) {
    throw std::invalid_argument("initial_window: prior covariance dimension mismatch");
  }
  RollingWindow w;
  w.horizon = horizon;
  w.state_dim = n;
  w.mean = prior_mean.replicate(horizon + 1, 1);
  w.cov = Mat::Zero(w.size(), w.size());
  for (int i = 0; i <= horizon; ++i) w.cov.block(i * n, i * n, n, n) = prior_cov;
  return w;
}

int StackedSystem::rows() const {
  int total = 0;
  for (const auto& g : groups) total += static_cast<int>(g.C.rows());
  return total;
}

Mat StackedSystem::C() const {
  Mat out(rows(), window_size);
  int at = 0;
  for (const auto& g : groups) {
    out.middleRows(at, g.C.rows()) = g.C;
    at += static_cast<int>(g.C.rows());
  }
  return out;
}

Vec StackedSystem::r() const {
  Vec out(rows());
  int at = 0;
  for (const auto& g : groups) {
    out.segment(at, g.r.size()) = g.r;
    at += static_cast<int>(g.r.size());
  }
  return out;
}

Mat StackedSystem::W() const {
  const int m = rows();
  Mat out = Mat::Zero(m, m);
  int at = 0;
  for (const auto& g : groups) {
    const auto k = g.W.rows();
    out.block(at, at, k, k) = g.W;
    at += static_cast<int>(k);
  }
  return out;
}

Mat StackedSystem::weight_inverse() const {
  const int m = rows();
  Mat out = Mat::Zero(m, m);
  int at = 0;
  for (const auto& g : groups) {
    const auto k = g.W.rows();
    out.block(at, at, k, k) = spd_inverse(g.W);
    at += static_cast<int>(k);
  }
  return out;
}

Mat StackedSystem::information() const {
  Mat info = Mat::Zero(window_size, window_size);
  for (const auto& g : groups) {
    Eigen::LLT<Mat> llt(g.W);
    if (llt.info() != Eigen::Success) throw NumericError("weight block is not positive definite");
    info.noalias() += g.C.transpose() * llt.solve(g.C);
  }
  return symmetrize(info);
}

Vec StackedSystem::information_vector() const {
  Vec eta = Vec::Zero(window_size);
  for (const auto& g : groups) {
    Eigen::LLT<Mat> llt(g.W);
    if (llt.info() != Eigen::Success) throw NumericError("weight block is not positive definite");
    eta.noalias() += g.C.transpose() * llt.solve(g.r);
  }
  return eta;
}

double StackedSystem::cost(const Vec& x) const {
  double total = 0.0;
  for (const auto& g : groups) {
    const Vec e = g.C * x - g.r;
    Eigen::LLT<Mat> llt(g.W);
    if (llt.info() != Eigen::Success) throw NumericError("weight block is not positive definite");
    total += e.dot(llt.solve(e));
  }
  return total;
}

StackedSystem build_stacked(const ProcessModel& model, const std::optional<Measurement>& meas,
                            const RollingWindow& prior) {
  const int n = prior.state_dim;
  const int H = prior.horizon;
  const int N = prior.size();
  if (model.A.rows() != n || model.A.cols() != n || model.Q.rows() != n || model.Q.cols() != n) {
    throw std::invalid_argument("build_stacked: process model does not match window state dimension");
  }
  if (prior.mean.size() != N || prior.cov.rows() != N || prior.cov.cols() != N) {
    throw std::invalid_argument("build_stacked: malformed prior window");
  }

  StackedSystem sys;
  sys.window_size = N;

  RowGroup dyn;
  dyn.C = Mat::Zero(n, N);
  dyn.C.block(0, (H - 1) * n, n, n) = -model.A;
  dyn.C.block(0, H * n, n, n) = Mat::Identity(n, n);
  dyn.r = Vec::Zero(n);
  dyn.W = model.Q;
  sys.groups.push_back(std::move(dyn));

  if (meas) {
    const auto m = meas->H.rows();
    if (meas->H.cols() != n || meas->pseudo_obs.size() != m || meas->R.rows() != m || meas->R.cols() != m) {
      throw std::invalid_argument("build_stacked: measurement dimension mismatch");
    }
    RowGroup obs;
    obs.C = Mat::Zero(m, N);
    obs.C.block(0, H * n, m, n) = meas->H;
    obs.r = meas->pseudo_obs;
    obs.W = meas->R;
    sys.groups.push_back(std::move(obs));
    sys.has_measurement = true;
  }

  RowGroup pri;
  pri.C = Mat::Zero(H * n, N);
  pri.C.leftCols(H * n) = Mat::Identity(H * n, H * n);
  pri.r = prior.mean.head(H * n);
  pri.W = symmetrize(prior.cov.topLeftCorner(H * n, H * n));
  sys.groups.push_back(std::move(pri));
  return sys;
}

RollingWindow advance_window(const RollingWindow& window, const ProcessModel& model) {
  const int n = window.state_dim;
  const int H = window.horizon;
  const int keep = H * n;
  RollingWindow out = window;
  out.mean.head(keep) = window.mean.tail(keep);
  out.mean.tail(n) = model.A * window.tail();

  out.cov.setZero();
  out.cov.topLeftCorner(keep, keep) = window.cov.bottomRightCorner(keep, keep);
  out.cov.bottomRightCorner(n, n) = symmetrize(model.A * window.tail_cov() * model.A.transpose() + model.Q);
  return out;
}

Vec shift_window_vector(const Vec& v, int state_dim) {
  Vec out = Vec::Zero(v.size());
  const auto keep = v.size() - state_dim;
  out.head(keep) = v.tail(keep);
  return out;
}

}  // namespace mavf
