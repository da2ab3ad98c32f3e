#pragma once

#include "mavf/window.hpp"

#include <vector>

namespace mavf {

struct Observation {
  Sensor sensor;
  Vec raw;
};

/// Centralized estimation problem over x_0..x_k: prior on x_0, the process
/// model, and every sensor's observations at steps 1..k (observations[l-1]).
struct BatchProblem {
  Vec prior_mean;
  Mat prior_cov;
  ProcessModel model;
  std::vector<std::vector<Observation>> observations;

  int steps() const { return static_cast<int>(observations.size()); }
};

struct BatchSolution {
  std::vector<Vec> states;  // x_0..x_k
  Mat cov;                  // joint covariance of the stacked trajectory
  int iterations = 0;
};

/// Negative log-posterior (up to constants, times two) of a trajectory.
double batch_objective(const BatchProblem& p, const std::vector<Vec>& trajectory);

/// MAP trajectory from the dense normal equations. Nonlinear sensors are
/// relinearized around the current trajectory until the update stalls.
/// Throws NumericError for a singular system.
BatchSolution solve_batch_map(const BatchProblem& p);

struct FilterStep {
  Vec mean;
  Mat cov;
};

/// Predict/update recursion on the concatenated measurements; element 0 is the prior.
std::vector<FilterStep> centralized_kf(const BatchProblem& p);

/// Rolling-window MAP with all measurements; element l-1 is the window at step l.
std::vector<RollingWindow> centralized_rwt(const BatchProblem& p, int horizon);

}  // namespace mavf
