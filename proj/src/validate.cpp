#include "mavf/validate.hpp"

#include "mavf/agent.hpp"
#include "mavf/gaussian.hpp"
#include "mavf/oracle.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>

namespace mavf {

namespace {

std::string describe(const char* label, double value, double tol) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%s=%.3e (tol %.1e)", label, value, tol);
  return buf;
}

Mat random_spd(int n, Rng& rng, double floor) {
  std::normal_distribution<double> normal;
  Mat a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = normal(rng);
  return a * a.transpose() / n + floor * Mat::Identity(n, n);
}

Vec random_vec(int n, Rng& rng, double scale) {
  std::normal_distribution<double> normal(0.0, scale);
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = normal(rng);
  return v;
}

// Gradient descent with Armijo backtracking on a smooth objective.
Vec descend(const std::function<double(const Vec&)>& f, const std::function<Vec(const Vec&)>& grad, Vec x,
            int max_iters) {
  double fx = f(x);
  double step = 1.0;
  for (int it = 0; it < max_iters; ++it) {
    const Vec g = grad(x);
    if (g.norm() < 1e-11) break;
    step *= 2.0;
    Vec cand = x - step * g;
    double fc = f(cand);
    while (fc > fx - 1e-4 * step * g.squaredNorm() && step > 1e-20) {
      step *= 0.5;
      cand = x - step * g;
      fc = f(cand);
    }
    if (fc >= fx) break;
    x = std::move(cand);
    fx = fc;
  }
  return x;
}

struct Instance {
  StackedSystem sys;
  Vec lambda;
  Vec own;
  std::vector<Vec> neighbors;
};

Instance random_instance(int horizon, Rng& rng) {
  const int n = kStateDim;
  const ProcessModel model = cv_model(1.0);
  RollingWindow prior = initial_window(horizon, random_vec(n, rng, 5.0), random_spd(n, rng, 0.5));
  prior.cov = random_spd(prior.size(), rng, 0.5);
  Measurement m;
  m.H = Mat::Zero(2, n);
  m.H(0, kPosX) = 1.0;
  m.H(1, kPosY) = 1.0;
  m.R = random_spd(2, rng, 0.3);
  m.pseudo_obs = random_vec(2, rng, 5.0);
  m.value = m.pseudo_obs;
  Instance inst;
  inst.sys = build_stacked(model, m, prior);
  inst.lambda = random_vec(prior.size(), rng, 1.0);
  inst.own = random_vec(prior.size(), rng, 5.0);
  for (int j = 0; j < 2; ++j) inst.neighbors.push_back(random_vec(prior.size(), rng, 5.0));
  return inst;
}

CheckResult check_primal(Rng& rng) {
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const Instance inst = random_instance(1 + trial % 3, rng);
    const double rho = 1.0;
    const Vec closed = primal_update(inst.sys, rho, inst.lambda, inst.own, inst.neighbors);
    const Mat K = inst.sys.information();
    const Vec eta = inst.sys.information_vector();
    auto f = [&](const Vec& x) {
      double v = x.dot(K * x) - 2.0 * eta.dot(x) + inst.lambda.dot(x);
      for (const auto& xj : inst.neighbors) v += rho * (x - 0.5 * (inst.own + xj)).squaredNorm();
      return v;
    };
    auto g = [&](const Vec& x) {
      Vec grad = 2.0 * (K * x - eta) + inst.lambda;
      for (const auto& xj : inst.neighbors) grad += 2.0 * rho * (x - 0.5 * (inst.own + xj));
      return grad;
    };
    const Vec numeric = descend(f, g, Vec::Zero(closed.size()), 200000);
    worst = std::max(worst, (numeric - closed).norm() / (1.0 + closed.norm()));
  }
  constexpr double tol = 1e-6;
  return {"primal_vs_numeric_minimizer", worst <= tol, describe("max_rel_diff", worst, tol)};
}

CheckResult check_mission_primal(Rng& rng) {
  double worst = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    const Instance inst = random_instance(1, rng);
    const double rho = 1.0;
    const Vec plain = primal_update(inst.sys, rho, inst.lambda, inst.own, inst.neighbors);
    const Eigen::Vector2d target(plain(kStateDim + kPosX) + 3.0, plain(kStateDim + kPosY) - 2.0);
    const MissionSpec mission = newest_position_mission(0, 4.0, 1, kStateDim, target);
    const double phi = 0.5;
    const auto res = primal_update_mission(inst.sys, rho, inst.lambda, inst.own, inst.neighbors, mission, phi);
    const Mat K = inst.sys.information();
    const Vec eta = inst.sys.information_vector();
    auto f = [&](const Vec& x) {
      double v = x.dot(K * x) - 2.0 * eta.dot(x) + inst.lambda.dot(x);
      for (const auto& xj : inst.neighbors) v += rho * (x - 0.5 * (inst.own + xj)).squaredNorm();
      const double s = std::max(mission.value(x) - mission.c + phi, 0.0);
      return v + 0.5 * rho * s * s;
    };
    auto g = [&](const Vec& x) {
      Vec grad = 2.0 * (K * x - eta) + inst.lambda;
      for (const auto& xj : inst.neighbors) grad += 2.0 * rho * (x - 0.5 * (inst.own + xj));
      const double s = std::max(mission.value(x) - mission.c + phi, 0.0);
      grad += rho * s * mission.gradient(x);
      return grad;
    };
    const Vec numeric = descend(f, g, plain, 200000);
    const double numeric_value =
        mission_objective(inst.sys, rho, inst.lambda, inst.own, inst.neighbors, mission, phi, numeric);
    worst = std::max(worst, std::abs(numeric_value - res.objective));
  }
  constexpr double tol = 1e-5;
  return {"mission_primal_vs_numeric_minimizer", worst <= tol, describe("max_objective_gap", worst, tol)};
}

CheckResult check_batch_vs_kf(Rng& rng) {
  BatchProblem p;
  p.model = cv_model(1.0);
  p.prior_mean = Vec::Zero(kStateDim);
  p.prior_cov = 25.0 * Mat::Identity(kStateDim, kStateDim);
  Sensor s;
  s.kind = SensorKind::kPosition;
  s.noise_std = 3.0;
  s.sensing_range = 1e12;
  Vec truth = p.prior_mean;
  for (int l = 0; l < 20; ++l) {
    truth = propagate_truth(p.model, truth, rng);
    p.observations.push_back({Observation{s, *measure(s, truth, rng)}});
  }
  const auto batch = solve_batch_map(p);
  const auto kf = centralized_kf(p);
  const double rel = (batch.states.back() - kf.back().mean).norm() / (1.0 + kf.back().mean.norm());
  constexpr double tol = 1e-8;
  return {"batch_map_vs_kalman_final_state", rel <= tol, describe("rel_diff", rel, tol)};
}

// Composite Simpson rule for KL(N(m1, v1) || N(m2, v2)) on a wide interval.
double kl_quadrature(double m1, double v1, double m2, double v2) {
  const double sd = std::sqrt(v1);
  const double a = m1 - 12.0 * sd;
  const double b = m1 + 12.0 * sd;
  constexpr int intervals = 20000;
  const double h = (b - a) / intervals;
  auto integrand = [&](double x) {
    const double lp = -0.5 * std::log(2.0 * std::numbers::pi * v1) - 0.5 * (x - m1) * (x - m1) / v1;
    const double lq = -0.5 * std::log(2.0 * std::numbers::pi * v2) - 0.5 * (x - m2) * (x - m2) / v2;
    return std::exp(lp) * (lp - lq);
  };
  double sum = integrand(a) + integrand(b);
  for (int i = 1; i < intervals; ++i) sum += integrand(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return sum * h / 3.0;
}

CheckResult check_kl() {
  const double cases[][4] = {{0, 1, 1, 1}, {0, 2, 0, 1}, {1.5, 0.3, -0.5, 2.0}, {0, 1, 0, 1}};
  double worst = 0.0;
  for (const auto& c : cases) {
    GaussianBelief p{Vec::Constant(1, c[0]), Mat::Constant(1, 1, c[1])};
    GaussianBelief q{Vec::Constant(1, c[2]), Mat::Constant(1, 1, c[3])};
    worst = std::max(worst, std::abs(gaussian_kl(p, q) - kl_quadrature(c[0], c[1], c[2], c[3])));
  }
  constexpr double tol = 1e-6;
  return {"gaussian_kl_vs_quadrature", worst <= tol, describe("max_abs_diff", worst, tol)};
}

}  // namespace

std::vector<CheckResult> run_validation(unsigned seed) {
  Rng rng(seed);
  std::vector<CheckResult> out;
  auto guarded = [&](const char* name, auto&& check) {
    try {
      out.push_back(check());
    } catch (const std::exception& e) {
      out.push_back({name, false, e.what()});
    }
  };
  guarded("primal_vs_numeric_minimizer", [&] { return check_primal(rng); });
  guarded("mission_primal_vs_numeric_minimizer", [&] { return check_mission_primal(rng); });
  guarded("batch_map_vs_kalman_final_state", [&] { return check_batch_vs_kf(rng); });
  guarded("gaussian_kl_vs_quadrature", [] { return check_kl(); });
  return out;
}

}  // namespace mavf
