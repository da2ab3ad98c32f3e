// Independent numeric oracles shared by the unit and acceptance tests.
#pragma once

#include "mavf/models.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

namespace testing {

using mavf::Mat;
using mavf::Rng;
using mavf::Vec;

inline Mat random_spd(int n, Rng& rng, double floor = 0.2) {
  std::normal_distribution<double> normal;
  Mat a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = normal(rng);
  return a * a.transpose() / n + floor * Mat::Identity(n, n);
}

inline Vec random_vec(int n, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = normal(rng);
  return v;
}

// BFGS with backtracking (Armijo) line search. Generic: only f and its gradient.
inline Vec bfgs(const std::function<double(const Vec&)>& f, const std::function<Vec(const Vec&)>& grad, Vec x,
                int max_iters = 5000, double gtol = 1e-12) {
  const auto n = x.size();
  Mat Hinv = Mat::Identity(n, n);
  double fx = f(x);
  Vec g = grad(x);
  for (int it = 0; it < max_iters && g.norm() > gtol; ++it) {
    Vec d = -Hinv * g;
    if (d.dot(g) >= 0.0) {
      Hinv = Mat::Identity(n, n);
      d = -g;
    }
    double t = 1.0;
    Vec cand = x + t * d;
    double fc = f(cand);
    while (fc > fx + 1e-4 * t * g.dot(d) && t > 1e-30) {
      t *= 0.5;
      cand = x + t * d;
      fc = f(cand);
    }
    if (!(fc <= fx)) break;
    const Vec gc = grad(cand);
    const Vec s = cand - x;
    const Vec y = gc - g;
    const double sy = s.dot(y);
    if (sy > 1e-300) {
      const double r = 1.0 / sy;
      const Mat I = Mat::Identity(n, n);
      Hinv = (I - r * s * y.transpose()) * Hinv * (I - r * y * s.transpose()) + r * s * s.transpose();
    }
    const bool stalled = s.norm() <= 1e-16 * (1.0 + x.norm());
    x = cand;
    fx = fc;
    g = gc;
    if (stalled) break;
  }
  return x;
}

// Composite Simpson rule for KL(N(m1, v1) || N(m2, v2)).
inline double kl_quadrature_1d(double m1, double v1, double m2, double v2) {
  const double sd = std::sqrt(v1);
  const double a = m1 - 14.0 * sd;
  const double b = m1 + 14.0 * sd;
  constexpr int intervals = 40000;
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

// Dense MAP of a linear trajectory x_0..x_k with direct-position (or any linear)
// observations, assembled from scratch as one weighted least-squares system.
struct LinearObs {
  int step;  // 1..k
  Mat H;
  Mat R;
  Vec z;
};

inline std::vector<Vec> dense_trajectory_map(const Vec& m0, const Mat& P0, const Mat& A, const Mat& Q, int steps,
                                             const std::vector<LinearObs>& obs) {
  const int n = static_cast<int>(m0.size());
  const int N = n * (steps + 1);
  Mat info = Mat::Zero(N, N);
  Vec eta = Vec::Zero(N);
  auto add = [&](const Mat& C, const Mat& W, const Vec& r) {
    const Mat Wi = W.inverse();
    info += C.transpose() * Wi * C;
    eta += C.transpose() * Wi * r;
  };
  Mat C0 = Mat::Zero(n, N);
  C0.leftCols(n) = Mat::Identity(n, n);
  add(C0, P0, m0);
  for (int l = 1; l <= steps; ++l) {
    Mat C = Mat::Zero(n, N);
    C.block(0, (l - 1) * n, n, n) = -A;
    C.block(0, l * n, n, n) = Mat::Identity(n, n);
    add(C, Q, Vec::Zero(n));
  }
  for (const auto& o : obs) {
    Mat C = Mat::Zero(o.H.rows(), N);
    C.block(0, o.step * n, o.H.rows(), n) = o.H;
    add(C, o.R, o.z);
  }
  const Vec x = info.fullPivLu().solve(eta);
  std::vector<Vec> out;
  for (int l = 0; l <= steps; ++l) out.push_back(x.segment(l * n, n));
  return out;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("mavf_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing
