#pragma once

#include "mavf/models.hpp"

#include <optional>
#include <vector>

namespace mavf {

/// Joint Gaussian over the H+1 most recent states, stacked oldest to newest.
struct RollingWindow {
  int horizon = 1;
  int state_dim = kStateDim;
  Vec mean;  // n(H+1)
  Mat cov;   // n(H+1) x n(H+1)

  int slots() const { return horizon + 1; }
  int size() const { return state_dim * slots(); }

  Vec slot(int i) const { return mean.segment(i * state_dim, state_dim); }
  Mat slot_cov(int i) const { return cov.block(i * state_dim, i * state_dim, state_dim, state_dim); }
  Vec tail() const { return slot(horizon); }
  Mat tail_cov() const { return slot_cov(horizon); }
};

/// Every slot set to the prior mean, block-diagonal covariance with P0 per slot.
RollingWindow initial_window(int horizon, const Vec& prior_mean, const Mat& prior_cov);

/// One weighted row group of the stacked least-squares system.
struct RowGroup {
  Mat C;  // rows x n(H+1)
  Vec r;
  Mat W;  // symmetric PD weight (covariance) block
};

/// Windowed least-squares system ||C x - r||^2_{W^-1} with block-diagonal W.
///
/// Row groups are, in order: dynamics [-A, I] on the two newest slots (r = 0,
/// W = Q), the measurement on the newest slot (r = pseudo-observation, W = R;
/// absent when there is no measurement), and the prior over the H oldest slots
/// (r = prior mean, W = prior covariance).
struct StackedSystem {
  int window_size = 0;
  std::vector<RowGroup> groups;
  bool has_measurement = false;

  int rows() const;
  Mat C() const;
  Vec r() const;
  Mat W() const;  // dense block-diagonal

  /// C^T W^-1 C accumulated group by group.
  Mat information() const;
  /// C^T W^-1 r accumulated group by group.
  Vec information_vector() const;
  /// W^-1 assembled from blockwise inverses.
  Mat weight_inverse() const;
  /// ||C x - r||^2_{W^-1}
  double cost(const Vec& x) const;
};

/// Builds the stacked system for the current step. `prior` is the advanced
/// window; its H oldest slots form the prior term and its tail is ignored.
/// Throws std::invalid_argument on dimension mismatches.
StackedSystem build_stacked(const ProcessModel& model, const std::optional<Measurement>& meas,
                            const RollingWindow& prior);

/// Rolls the window one step forward: the oldest slot is marginalized out, the
/// new tail is predicted as A x_tail with covariance A P_tail A^T + Q and no
/// cross-covariance to the retained slots.
RollingWindow advance_window(const RollingWindow& window, const ProcessModel& model);

/// Shifts a window-indexed vector (e.g. a dual variable) one slot, zero-filling the new tail.
Vec shift_window_vector(const Vec& v, int state_dim);

/// (M + M^T) / 2
Mat symmetrize(const Mat& m);

}  // namespace mavf
