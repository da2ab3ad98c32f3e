#pragma once

#include "mavf/agent.hpp"
#include "mavf/gaussian.hpp"

#include <limits>

namespace mavf {

struct CensorConfig {
  double gamma = 0.0;  // +inf censors everything

  static constexpr double never() { return std::numeric_limits<double>::infinity(); }
};

/// Aggregated primal-dual belief: mean (x, lambda, phi...), covariance
/// block-diag(P, I, I). `phi` is empty when the scenario has no missions.
GaussianBelief aggregate(const Vec& x, const Mat& P, const Vec& lambda, std::span<const double> phi);

/// What the agent would hold after this step without new information: no
/// measurement rows, an empty neighborhood, unchanged lambda, and the mission
/// duals it last transmitted. `mission` is the agent's own mission, if any.
/// Does not modify `state`.
GaussianBelief baseline_propagate(const AgentState& state, const ProcessModel& model, double rho,
                                  const MissionSpec* mission);

struct VoiDecision {
  bool transmit = false;
  double voi = 0.0;
};

/// transmit iff KL(actual || baseline) >= gamma.
VoiDecision voi_decision(const GaussianBelief& actual, const GaussianBelief& baseline, const CensorConfig& cfg);

}  // namespace mavf
