#include "doctest.h"
#include "support.hpp"

#include "mavf/agent.hpp"

using namespace mavf;

namespace {

struct Problem {
  StackedSystem sys;
  Vec lambda;
  Vec own;
  std::vector<Vec> neighbors;
  Mat Winv;
  Mat C;
  Vec r;
};

Problem random_problem(int H, int neighbors, Rng& rng) {
  const ProcessModel model = cv_model(1.0, 0.5);
  RollingWindow prior = initial_window(H, testing::random_vec(4, rng, 3.0), testing::random_spd(4, rng));
  prior.cov = testing::random_spd(prior.size(), rng, 0.3);
  Sensor s;
  s.kind = SensorKind::kPosition;
  s.noise_std = 0.8;
  Problem p;
  p.sys = build_stacked(model, *linearize(s, Vec::Zero(4), testing::random_vec(2, rng, 3.0)), prior);
  p.lambda = testing::random_vec(prior.size(), rng);
  p.own = testing::random_vec(prior.size(), rng, 3.0);
  for (int j = 0; j < neighbors; ++j) p.neighbors.push_back(testing::random_vec(prior.size(), rng, 3.0));
  p.C = p.sys.C();
  p.r = p.sys.r();
  p.Winv = p.sys.W().inverse();
  return p;
}

// Objective and gradient written out from the dense C, W, r.
double dense_objective(const Problem& p, double rho, const Vec& x) {
  const Vec e = p.C * x - p.r;
  double v = e.dot(p.Winv * e) + p.lambda.dot(x);
  for (const auto& xj : p.neighbors) v += rho * (x - 0.5 * (p.own + xj)).squaredNorm();
  return v;
}

Vec dense_gradient(const Problem& p, double rho, const Vec& x) {
  Vec g = 2.0 * p.C.transpose() * p.Winv * (p.C * x - p.r) + p.lambda;
  for (const auto& xj : p.neighbors) g += 2.0 * rho * (x - 0.5 * (p.own + xj));
  return g;
}

}  // namespace

TEST_CASE("primal without neighbors is weighted least squares") {
  Rng rng(21);
  for (int H = 1; H <= 3; ++H) {
    Problem p = random_problem(H, 0, rng);
    p.lambda.setZero();
    const Vec x = primal_update(p.sys, 1.0, p.lambda, p.own, p.neighbors);
    // Oracle: QR least squares on the whitened system.
    const Eigen::LLT<Mat> chol(p.Winv);
    const Mat L = chol.matrixU();
    const Vec ls = (L * p.C).colPivHouseholderQr().solve(L * p.r);
    CHECK((x - ls).norm() <= 1e-8 * (1.0 + ls.norm()));
  }
}

TEST_CASE("primal is the stationary point") {
  Rng rng(22);
  for (int trial = 0; trial < 30; ++trial) {
    const Problem p = random_problem(1 + trial % 3, trial % 4, rng);
    const double rho = 0.1 + trial * 0.2;
    const Vec x = primal_update(p.sys, rho, p.lambda, p.own, p.neighbors);
    CHECK(dense_gradient(p, rho, x).norm() <= 1e-8 * (1.0 + p.r.norm()));
    CHECK(primal_objective(p.sys, rho, p.lambda, p.own, p.neighbors, x) ==
          doctest::Approx(dense_objective(p, rho, x)).epsilon(1e-10));
  }
}

TEST_CASE("primal with agreeing neighbors") {
  Rng rng(23);
  Problem p = random_problem(2, 0, rng);
  p.lambda.setZero();
  const double rho = 0.7;
  p.own = testing::random_vec(p.sys.window_size, rng);
  p.neighbors = {p.own, p.own, p.own};
  const Vec x = primal_update(p.sys, rho, p.lambda, p.own, p.neighbors);
  // The penalty pulls toward own with weight rho * d: inflated diagonal solve.
  const Mat K = p.C.transpose() * p.Winv * p.C;
  const Vec eta = p.C.transpose() * p.Winv * p.r;
  const Mat lhs = 2.0 * K + 2.0 * rho * 3 * Mat::Identity(K.rows(), K.cols());
  const Vec expect = lhs.fullPivLu().solve(2.0 * eta + 2.0 * rho * 3 * p.own);
  CHECK((x - expect).norm() <= 1e-8 * (1.0 + expect.norm()));
  const Vec numeric = testing::bfgs([&](const Vec& v) { return dense_objective(p, rho, v); },
                                    [&](const Vec& v) { return dense_gradient(p, rho, v); }, Vec::Zero(x.size()));
  CHECK((numeric - x).norm() <= 1e-6 * (1.0 + x.norm()));
}

TEST_CASE("primal approaches the local estimate as rho vanishes") {
  Rng rng(24);
  Problem p = random_problem(1, 2, rng);
  p.lambda.setZero();
  const Vec local = primal_update(p.sys, 1.0, p.lambda, p.own, std::vector<Vec>{});
  const Vec tiny = primal_update(p.sys, 1e-12, p.lambda, p.own, p.neighbors);
  CHECK((tiny - local).norm() <= 1e-8 * (1.0 + local.norm()));
  CHECK_THROWS_AS(primal_update(p.sys, 0.0, p.lambda, p.own, p.neighbors), std::invalid_argument);
}

TEST_CASE("mission primal with inactive constraint matches plain primal") {
  Rng rng(25);
  const Problem p = random_problem(1, 2, rng);
  const double rho = 1.0;
  const Vec plain = primal_update(p.sys, rho, p.lambda, p.own, p.neighbors);
  const Eigen::Vector2d target(plain(4 + kPosX), plain(4 + kPosY));
  const MissionSpec mission = newest_position_mission(0, 100.0, 1, 4, target);
  const auto res = primal_update_mission(p.sys, rho, p.lambda, p.own, p.neighbors, mission, 0.0);
  CHECK((res.x - plain).norm() <= 1e-6);
  CHECK(res.converged);
}

TEST_CASE("mission primal matches a generic minimizer") {
  Rng rng(26);
  for (int trial = 0; trial < 10; ++trial) {
    const Problem p = random_problem(1, 1 + trial % 3, rng);
    const double rho = 0.5 + 0.25 * trial;
    const Vec plain = primal_update(p.sys, rho, p.lambda, p.own, p.neighbors);
    const Eigen::Vector2d target(plain(4 + kPosX) + 2.0, plain(4 + kPosY) - 1.5);
    const MissionSpec mission = newest_position_mission(0, 1.0, 1, 4, target);
    const double phi = 0.1 * trial;
    const auto res = primal_update_mission(p.sys, rho, p.lambda, p.own, p.neighbors, mission, phi);
    auto f = [&](const Vec& x) {
      const double s = std::max((mission.M * x - mission.m).squaredNorm() - mission.c + phi, 0.0);
      return dense_objective(p, rho, x) + 0.5 * rho * s * s;
    };
    auto g = [&](const Vec& x) {
      const Vec d = mission.M * x - mission.m;
      const double s = std::max(d.squaredNorm() - mission.c + phi, 0.0);
      return Vec(dense_gradient(p, rho, x) + 2.0 * rho * s * mission.M.transpose() * d);
    };
    const Vec numeric = testing::bfgs(f, g, plain);
    CHECK(std::abs(f(numeric) - res.objective) <= 1e-5);
    CHECK(res.objective <= f(numeric) + 1e-5);
  }
}

TEST_CASE("mission pressure reduces g") {
  Rng rng(27);
  const Problem p = random_problem(1, 2, rng);
  const double rho = 1.0;
  const Vec plain = primal_update(p.sys, rho, p.lambda, p.own, p.neighbors);
  const Eigen::Vector2d target(plain(4 + kPosX) + 4.0, plain(4 + kPosY) + 3.0);
  const MissionSpec mission = newest_position_mission(0, 1.0, 1, 4, target);
  double last = mission.value(plain) + 1.0;
  for (double phi : {0.0, 1.0, 10.0}) {
    const auto res = primal_update_mission(p.sys, rho, p.lambda, p.own, p.neighbors, mission, phi);
    const double g = mission.value(res.x);
    CHECK(g < last);
    last = g;
  }
}

TEST_CASE("mission spec value and gradient") {
  const Eigen::Vector2d target(1.0, 2.0);
  const MissionSpec m = newest_position_mission(3, 5.0, 2, 4, target, 0.5);
  CHECK(m.owner == 3);
  CHECK(m.M.cols() == 12);
  Vec x = Vec::Zero(12);
  x(8 + kPosX) = 4.0;
  x(8 + kPosY) = 6.0;
  CHECK(m.value(x) == doctest::Approx(9.0 + 16.0 + 0.5));
  const Vec g = m.gradient(x);
  CHECK(g(8 + kPosX) == doctest::Approx(6.0));
  CHECK(g(8 + kPosY) == doctest::Approx(8.0));
  CHECK(g.head(8).isZero(0.0));
}

TEST_CASE("covariance_update") {
  // Prior only, identity dynamics, no noise on the prior slot: inverse of the prior information.
  Rng rng(28);
  ProcessModel still;
  still.A = Mat::Identity(4, 4);
  still.Q = 0.5 * Mat::Identity(4, 4);
  const Mat P0 = testing::random_spd(4, rng);
  const RollingWindow prior = initial_window(1, Vec::Zero(4), P0);
  const StackedSystem sys = build_stacked(still, std::nullopt, prior);
  const Mat P = covariance_update(sys);
  const Mat C = sys.C();
  const Mat dense = (C.transpose() * sys.W().inverse() * C).inverse();
  CHECK((P - dense).norm() <= 1e-9 * dense.norm());
  CHECK((P.topLeftCorner(4, 4) - P0).norm() <= 1e-9 * P0.norm());

  for (int trial = 0; trial < 20; ++trial) {
    RollingWindow w = initial_window(1 + trial % 3, testing::random_vec(4, rng), testing::random_spd(4, rng));
    w.cov = testing::random_spd(w.size(), rng);
    const ProcessModel model = cv_model(1.0, 0.4);
    Sensor s;
    s.kind = SensorKind::kPosition;
    s.noise_std = 1.3;
    const Mat without = covariance_update(build_stacked(model, std::nullopt, w));
    const Mat with = covariance_update(build_stacked(model, *linearize(s, Vec::Zero(4), Vec::Zero(2)), w));
    CHECK(((without - with).diagonal().array() >= -1e-10).all());
  }
}

TEST_CASE("dual updates") {
  const Vec lambda = Vec::LinSpaced(4, 1.0, 4.0);
  const Vec x = Vec::Constant(4, 2.0);
  const std::vector<Vec> same{x, x};
  CHECK(dual_update(lambda, 1.0, x, same) == lambda);
  CHECK(dual_update(lambda, 1.0, x, std::vector<Vec>{}) == lambda);
  const Vec v = Vec::LinSpaced(4, -1.0, 1.0);
  const std::vector<Vec> one{Vec(x - v)};
  CHECK((dual_update(lambda, 2.0, x, one) - (lambda + 2.0 * v)).norm() < 1e-15);

  CHECK(mission_dual_update(0.0, 1.0, 3.0, 3.0) == 0.0);
  CHECK(mission_dual_update(0.5, 1.0, 2.0, 3.0) == 0.0);
  CHECK(mission_dual_update(0.2, 0.1, 5.0, 3.0) == doctest::Approx(0.4));
}

TEST_CASE("logop merge") {
  Rng rng(29);
  const GaussianBelief own{testing::random_vec(3, rng), testing::random_spd(3, rng)};
  const GaussianBelief alone = logop_merge(own, std::vector<GaussianBelief>{});
  CHECK((alone.cov - own.cov).norm() < 1e-12);
  CHECK((alone.mean - own.mean).norm() < 1e-12);

  const GaussianBelief twin = logop_merge(own, std::vector<GaussianBelief>{own});
  CHECK((twin.cov - own.cov / 2.0).norm() < 1e-12);
  CHECK((twin.mean - own.mean).norm() < 1e-10);

  const GaussianBelief b{testing::random_vec(3, rng), testing::random_spd(3, rng)};
  const GaussianBelief c{testing::random_vec(3, rng), testing::random_spd(3, rng)};
  const std::vector<GaussianBelief> rx{b, c};
  const GaussianBelief merged = logop_merge(own, rx);
  const Mat info = own.cov.inverse() + b.cov.inverse() + c.cov.inverse();
  CHECK((merged.cov.inverse() - info).norm() <= 1e-10 * info.norm());
  const Vec mean = info.inverse() * (own.cov.inverse() * own.mean + b.cov.inverse() * b.mean + c.cov.inverse() * c.mean);
  CHECK((merged.mean - mean).norm() <= 1e-10 * (1.0 + mean.norm()));

  const GaussianBelief avg = logop_merge(own, rx, true);
  CHECK((avg.cov.inverse() - info / 3.0).norm() <= 1e-10 * info.norm());
  CHECK((avg.mean - mean).norm() <= 1e-10 * (1.0 + mean.norm()));

  const GaussianBelief wrong{Vec::Zero(2), Mat::Identity(2, 2)};
  CHECK_THROWS_AS(logop_merge(own, std::vector<GaussianBelief>{wrong}), std::invalid_argument);
}

TEST_CASE("phi consensus") {
  const std::map<int, double> own{{1, 0.7}, {4, 0.0}};
  const std::vector<std::map<int, double>> rx{{{1, 0.0}, {4, 0.2}}, {{1, 5.0}, {4, 0.4}}};
  const auto merged = phi_consensus(1, own, rx);
  CHECK(merged.at(1) == 0.7);
  CHECK(merged.at(4) == doctest::Approx(0.3));
  CHECK(phi_consensus(2, own, std::vector<std::map<int, double>>{}) == own);
}

TEST_CASE("phi propagates along a path") {
  // Owner 0 holds a fixed dual; copies travel one hop per round.
  std::vector<std::map<int, double>> phi(5, {{0, 0.0}});
  phi[0][0] = 2.5;
  for (int round = 0; round < 1000; ++round) {
    const auto prev = phi;
    for (int i = 0; i < 5; ++i) {
      std::vector<std::map<int, double>> rx;
      if (i > 0) rx.push_back(prev[i - 1]);
      if (i < 4) rx.push_back(prev[i + 1]);
      phi[i] = phi_consensus(i, prev[i], rx);
    }
  }
  for (int i = 0; i < 5; ++i) CHECK(phi[i].at(0) == doctest::Approx(2.5).epsilon(1e-9));
}
