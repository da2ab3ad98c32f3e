#include "mavf/agent.hpp"

#include "mavf/error.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mavf {

namespace {

constexpr int kMaxMissionSteps = 20;
constexpr double kMissionTolerance = 1e-8;

struct Normal {
  Mat lhs;  // 2 C^T W^-1 C + 2 rho d I
  Vec rhs;  // 2 C^T W^-1 r - lambda + rho sum_j (own + x_j)
};

Normal normal_equations(const StackedSystem& sys, double rho, const Vec& lambda, const Vec& own,
                        std::span<const Vec> neighbors) {
  const int N = sys.window_size;
  if (lambda.size() != N || own.size() != N) {
    throw std::invalid_argument("primal update: window dimension mismatch");
  }
  Normal ne;
  const auto d = static_cast<double>(neighbors.size());
  ne.lhs = 2.0 * sys.information();
  ne.lhs.diagonal().array() += 2.0 * rho * d;
  ne.rhs = 2.0 * sys.information_vector() - lambda;
  for (const auto& xj : neighbors) {
    if (xj.size() != N) throw std::invalid_argument("primal update: neighbor dimension mismatch");
    ne.rhs += rho * (own + xj);
  }
  return ne;
}

double consensus_penalty(double rho, const Vec& own, std::span<const Vec> neighbors, const Vec& x) {
  double total = 0.0;
  for (const auto& xj : neighbors) total += (x - 0.5 * (own + xj)).squaredNorm();
  return rho * total;
}

}  // namespace

double MissionSpec::value(const Vec& x) const { return (M * x - m).squaredNorm() + offset; }

Vec MissionSpec::gradient(const Vec& x) const { return 2.0 * M.transpose() * (M * x - m); }

MissionSpec newest_position_mission(int owner, double c, int horizon, int state_dim,
                                    const Eigen::Vector2d& target, double offset) {
  MissionSpec spec;
  spec.owner = owner;
  spec.c = c;
  spec.M = Mat::Zero(2, state_dim * (horizon + 1));
  spec.M(0, horizon * state_dim + kPosX) = 1.0;
  spec.M(1, horizon * state_dim + kPosY) = 1.0;
  spec.m = target;
  spec.offset = offset;
  return spec;
}

std::vector<Vec> neighbor_means(const AgentState& state) {
  std::vector<Vec> out;
  out.reserve(state.neighbors.size());
  for (const auto& [id, view] : state.neighbors) out.push_back(view.window.mean);
  return out;
}

Vec primal_update(const StackedSystem& sys, double rho, const Vec& lambda, const Vec& own,
                  std::span<const Vec> neighbors) {
  if (!(rho > 0.0)) throw std::invalid_argument("primal_update: rho must be positive");
  const Normal ne = normal_equations(sys, rho, lambda, own, neighbors);
  Eigen::LLT<Mat> llt(ne.lhs);
  if (llt.info() != Eigen::Success) throw NumericError("primal_update: singular normal matrix");
  return llt.solve(ne.rhs);
}

double primal_objective(const StackedSystem& sys, double rho, const Vec& lambda, const Vec& own,
                        std::span<const Vec> neighbors, const Vec& x) {
  return sys.cost(x) + lambda.dot(x) + consensus_penalty(rho, own, neighbors, x);
}

double mission_objective(const StackedSystem& sys, double rho, const Vec& lambda, const Vec& own,
                         std::span<const Vec> neighbors, const MissionSpec& mission, double phi,
                         const Vec& x) {
  const double s = std::max(mission.value(x) - mission.c + phi, 0.0);
  return primal_objective(sys, rho, lambda, own, neighbors, x) + 0.5 * rho * s * s;
}

MissionPrimalResult primal_update_mission(const StackedSystem& sys, double rho, const Vec& lambda,
                                          const Vec& own, std::span<const Vec> neighbors,
                                          const MissionSpec& mission, double phi) {
  if (!(rho > 0.0)) throw std::invalid_argument("primal_update_mission: rho must be positive");
  if (mission.M.cols() != sys.window_size) {
    throw std::invalid_argument("primal_update_mission: mission matrix does not match window");
  }
  const Normal ne = normal_equations(sys, rho, lambda, own, neighbors);
  Eigen::LLT<Mat> base(ne.lhs);
  if (base.info() != Eigen::Success) throw NumericError("primal_update_mission: singular normal matrix");

  auto objective = [&](const Vec& x) {
    return mission_objective(sys, rho, lambda, own, neighbors, mission, phi, x);
  };

  MissionPrimalResult res;
  res.x = base.solve(ne.rhs);
  res.objective = objective(res.x);
  const Mat MtM = mission.M.transpose() * mission.M;

  for (int it = 0; it < kMaxMissionSteps; ++it) {
    const double s = mission.value(res.x) - mission.c + phi;
    if (it == 0 && s <= 0.0) return res;  // penalty inactive at the plain solution
    const double active = std::max(s, 0.0);
    const Vec grad_g = mission.gradient(res.x);
    const Vec grad = ne.lhs * res.x - ne.rhs + rho * active * grad_g;
    if (grad.norm() <= kMissionTolerance * (1.0 + ne.rhs.norm())) {
      res.iterations = it;
      return res;
    }

    // Linearize g around the iterate; g's own curvature enters through 2 M^T M.
    Mat hess = ne.lhs;
    if (active > 0.0) hess += rho * (grad_g * grad_g.transpose() + 2.0 * active * MtM);
    Eigen::LLT<Mat> llt(hess);
    const Vec step = -llt.solve(grad);

    double t = 1.0;
    Vec candidate = res.x + step;
    double f = objective(candidate);
    const double slope = grad.dot(step);
    while (f > res.objective + 1e-4 * t * slope && t > 1e-12) {
      t *= 0.5;
      candidate = res.x + t * step;
      f = objective(candidate);
    }
    if (f > res.objective) {
      res.iterations = it + 1;
      res.converged = false;
      return res;
    }
    const double moved = (candidate - res.x).norm();
    res.x = std::move(candidate);
    res.objective = f;
    res.iterations = it + 1;
    if (moved <= kMissionTolerance * (1.0 + res.x.norm())) return res;
  }
  const double s = std::max(mission.value(res.x) - mission.c + phi, 0.0);
  const Vec grad = ne.lhs * res.x - ne.rhs + rho * s * mission.gradient(res.x);
  res.converged = grad.norm() <= 1e-6 * (1.0 + ne.rhs.norm());
  return res;
}

Mat covariance_update(const StackedSystem& sys) {
  const Mat info = sys.information();
  Eigen::LLT<Mat> llt(info);
  if (llt.info() != Eigen::Success) throw NumericError("covariance_update: information matrix is singular");
  return symmetrize(llt.solve(Mat::Identity(info.rows(), info.cols())));
}

Vec dual_update(const Vec& lambda, double rho, const Vec& own, std::span<const Vec> neighbors) {
  Vec out = lambda;
  for (const auto& xj : neighbors) out += rho * (own - xj);
  return out;
}

double mission_dual_update(double phi, double rho, double g_val, double c) {
  return std::max(0.0, phi + rho * (g_val - c));
}

GaussianBelief logop_merge(const GaussianBelief& own, std::span<const GaussianBelief> received, bool normalized) {
  const auto k = own.dim();
  auto information = [](const Mat& cov) {
    Eigen::LLT<Mat> llt(cov);
    if (llt.info() != Eigen::Success) throw NumericError("logop_merge: covariance is not positive definite");
    return Mat(llt.solve(Mat::Identity(cov.rows(), cov.cols())));
  };
  Mat info = information(own.cov);
  Vec eta = info * own.mean;
  for (const auto& b : received) {
    if (b.dim() != k || b.cov.rows() != k) throw std::invalid_argument("logop_merge: dimension mismatch");
    const Mat bi = information(b.cov);
    info += bi;
    eta += bi * b.mean;
  }
  if (normalized) {
    const double w = 1.0 / static_cast<double>(received.size() + 1);
    info *= w;
    eta *= w;
  }
  info = symmetrize(info);
  Eigen::LLT<Mat> llt(info);
  GaussianBelief merged;
  merged.cov = symmetrize(llt.solve(Mat::Identity(k, k)));
  merged.mean = llt.solve(eta);
  return merged;
}

std::map<int, double> phi_consensus(int self_id, const std::map<int, double>& own,
                                    std::span<const std::map<int, double>> received) {
  std::map<int, double> out = own;
  for (auto& [owner, value] : out) {
    if (owner == self_id) continue;
    double sum = 0.0;
    int count = 0;
    for (const auto& r : received) {
      if (auto it = r.find(owner); it != r.end()) {
        sum += it->second;
        ++count;
      }
    }
    if (count > 0) value = sum / count;
  }
  return out;
}

}  // namespace mavf
