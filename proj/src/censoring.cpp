#include "mavf/censoring.hpp"

#include <vector>

namespace mavf {

GaussianBelief aggregate(const Vec& x, const Mat& P, const Vec& lambda, std::span<const double> phi) {
  const auto n = x.size();
  const auto l = lambda.size();
  const auto p = static_cast<Eigen::Index>(phi.size());
  GaussianBelief b;
  b.mean.resize(n + l + p);
  b.mean.head(n) = x;
  b.mean.segment(n, l) = lambda;
  for (Eigen::Index i = 0; i < p; ++i) b.mean(n + l + i) = phi[static_cast<size_t>(i)];
  b.cov = Mat::Identity(n + l + p, n + l + p);
  b.cov.topLeftCorner(n, n) = P;
  return b;
}

GaussianBelief baseline_propagate(const AgentState& state, const ProcessModel& model, double rho,
                                  const MissionSpec* mission) {
  const StackedSystem sys = build_stacked(model, std::nullopt, state.prior);
  const std::span<const Vec> none;
  Vec x;
  if (mission) {
    const auto it = state.phi_reported.find(mission->owner);
    const double phi = it != state.phi_reported.end() ? it->second : 0.0;
    x = primal_update_mission(sys, rho, state.lambda, state.estimate.mean, none, *mission, phi).x;
  } else {
    x = primal_update(sys, rho, state.lambda, state.estimate.mean, none);
  }
  std::vector<double> phi;
  phi.reserve(state.phi_reported.size());
  for (const auto& [owner, value] : state.phi_reported) phi.push_back(value);
  return aggregate(x, covariance_update(sys), state.lambda, phi);
}

VoiDecision voi_decision(const GaussianBelief& actual, const GaussianBelief& baseline, const CensorConfig& cfg) {
  VoiDecision d;
  d.voi = gaussian_kl(actual, baseline);
  d.transmit = d.voi >= cfg.gamma;
  return d;
}

}  // namespace mavf
