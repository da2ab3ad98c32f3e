#include "doctest.h"
#include "support.hpp"

#include "mavf/oracle.hpp"

using namespace mavf;

namespace {

Sensor position_sensor(double sd) {
  Sensor s;
  s.kind = SensorKind::kPosition;
  s.noise_std = sd;
  s.sensing_range = 1e12;
  return s;
}

BatchProblem linear_problem(int steps, double sd, Rng& rng, std::vector<testing::LinearObs>* dense = nullptr,
                            std::vector<Vec>* truths = nullptr) {
  BatchProblem p;
  p.model = cv_model(1.0, 0.5);
  p.prior_mean = testing::random_vec(4, rng, 5.0);
  p.prior_cov = testing::random_spd(4, rng, 1.0) * 10.0;
  const Sensor s = position_sensor(sd);
  Vec truth = p.prior_mean;
  for (int l = 1; l <= steps; ++l) {
    truth = propagate_truth(p.model, truth, rng);
    if (truths) truths->push_back(truth);
    const Vec z = *measure(s, truth, rng);
    p.observations.push_back({Observation{s, z}});
    if (dense) {
      Mat H = Mat::Zero(2, 4);
      H(0, kPosX) = 1.0;
      H(1, kPosY) = 1.0;
      dense->push_back({l, H, sd * sd * Mat::Identity(2, 2), z});
    }
  }
  return p;
}

}  // namespace

TEST_CASE("batch MAP without measurements is the prior") {
  Rng rng(51);
  BatchProblem p = linear_problem(0, 1.0, rng);
  const BatchSolution sol = solve_batch_map(p);
  REQUIRE(sol.states.size() == 1);
  CHECK((sol.states[0] - p.prior_mean).norm() < 1e-12);
  CHECK((sol.cov - p.prior_cov).norm() < 1e-9 * p.prior_cov.norm());
}

TEST_CASE("batch MAP matches the dense trajectory solve") {
  Rng rng(52);
  std::vector<testing::LinearObs> obs;
  const BatchProblem p = linear_problem(2, 2.0, rng, &obs);
  const auto expect = testing::dense_trajectory_map(p.prior_mean, p.prior_cov, p.model.A, p.model.Q, 2, obs);
  const BatchSolution sol = solve_batch_map(p);
  for (int l = 0; l <= 2; ++l) CHECK((sol.states[l] - expect[l]).norm() <= 1e-9 * (1.0 + expect[l].norm()));
  // Objective is minimal at the solution.
  const double f0 = batch_objective(p, sol.states);
  auto moved = sol.states;
  moved[1](0) += 1e-3;
  CHECK(batch_objective(p, moved) > f0);
}

TEST_CASE("Kalman filter final state equals batch MAP") {
  Rng rng(53);
  const BatchProblem p = linear_problem(20, 3.0, rng);
  const auto kf = centralized_kf(p);
  const BatchSolution batch = solve_batch_map(p);
  const Vec& a = kf.back().mean;
  const Vec& b = batch.states.back();
  CHECK((a - b).norm() <= 1e-8 * b.norm());
  const Mat tail_cov = batch.cov.bottomRightCorner(4, 4);
  CHECK((kf.back().cov - tail_cov).norm() <= 1e-8 * tail_cov.norm());
}

TEST_CASE("precise sensor pins the filter to the measurement") {
  Rng rng(54);
  const BatchProblem p = linear_problem(5, 1e-6, rng);
  const auto kf = centralized_kf(p);
  for (int l = 1; l <= 5; ++l) {
    const Vec& z = p.observations[l - 1][0].raw;
    CHECK(std::abs(kf[l].mean(kPosX) - z(0)) < 1e-5);
    CHECK(std::abs(kf[l].mean(kPosY) - z(1)) < 1e-5);
  }
}

TEST_CASE("filter covariance reaches the Riccati fixed point") {
  Rng rng(55);
  const BatchProblem p = linear_problem(400, 2.0, rng);
  const auto kf = centralized_kf(p);
  const Mat& last = kf.back().cov;
  CHECK((last - kf[kf.size() - 2].cov).norm() <= 1e-10 * last.norm());

  // Independent fixed point iteration on the information form.
  Mat H = Mat::Zero(2, 4);
  H(0, kPosX) = 1.0;
  H(1, kPosY) = 1.0;
  const Mat Ri = Mat::Identity(2, 2) / 4.0;
  Mat P = Mat::Identity(4, 4);
  for (int i = 0; i < 2000; ++i) {
    const Mat pred = p.model.A * P * p.model.A.transpose() + p.model.Q;
    P = (pred.inverse() + H.transpose() * Ri * H).inverse();
  }
  CHECK((last - P).norm() <= 1e-8 * P.norm());
}

TEST_CASE("window covering the whole horizon equals batch MAP") {
  Rng rng(56);
  const BatchProblem p = linear_problem(5, 2.0, rng);
  const auto windows = centralized_rwt(p, 5);
  const BatchSolution batch = solve_batch_map(p);
  const RollingWindow& w = windows.back();
  for (int l = 0; l <= 5; ++l) CHECK((w.slot(l) - batch.states[l]).norm() <= 1e-8 * (1.0 + batch.states[l].norm()));
}

TEST_CASE("short window tracks the Kalman filter") {
  Rng rng(57);
  std::vector<Vec> truths;
  const BatchProblem p = linear_problem(200, 3.0, rng, nullptr, &truths);
  const auto kf = centralized_kf(p);
  const auto rwt = centralized_rwt(p, 1);
  double e_kf = 0.0, e_rwt = 0.0;
  for (int l = 1; l <= p.steps(); ++l) {
    const Vec& x = truths[l - 1];
    e_kf += std::pow(kf[l].mean(kPosX) - x(kPosX), 2) + std::pow(kf[l].mean(kPosY) - x(kPosY), 2);
    const Vec tail = rwt[l - 1].tail();
    e_rwt += std::pow(tail(kPosX) - x(kPosX), 2) + std::pow(tail(kPosY) - x(kPosY), 2);
  }
  e_kf = std::sqrt(e_kf / p.steps());
  e_rwt = std::sqrt(e_rwt / p.steps());
  CHECK(std::abs(e_rwt - e_kf) <= 0.1 * e_kf);
}

TEST_CASE("nonlinear batch relinearizes to a stationary point") {
  Rng rng(58);
  BatchProblem p;
  p.model = cv_model(1.0, 0.2);
  p.prior_mean = (Vec(4) << 300, 5, 400, -3).finished();
  p.prior_cov = Vec(Eigen::Vector4d(400, 4, 400, 4)).asDiagonal();
  Sensor toa;
  toa.kind = SensorKind::kToa;
  toa.noise_std = 5.0;
  toa.sensing_range = 1e9;
  Sensor doa;
  doa.kind = SensorKind::kDoa;
  doa.noise_std = 0.02;
  doa.position = Eigen::Vector2d(900, 0);
  doa.sensing_range = 1e9;
  Vec truth = p.prior_mean;
  for (int l = 0; l < 15; ++l) {
    truth = propagate_truth(p.model, truth, rng);
    p.observations.push_back({Observation{toa, *measure(toa, truth, rng)}, Observation{doa, *measure(doa, truth, rng)}});
  }
  const BatchSolution sol = solve_batch_map(p);
  const double f0 = batch_objective(p, sol.states);
  for (int trial = 0; trial < 20; ++trial) {
    auto moved = sol.states;
    for (auto& x : moved) x += testing::random_vec(4, rng, 1e-3);
    CHECK(batch_objective(p, moved) >= f0 - 1e-9 * f0);
  }
}
