#pragma once

#include "mavf/models.hpp"

namespace mavf {

struct GaussianBelief {
  Vec mean;
  Mat cov;

  Eigen::Index dim() const { return mean.size(); }
};

/// Closed-form KL(p || q) between multivariate Gaussians.
/// Throws std::invalid_argument on dimension mismatch and NumericError if a
/// covariance is not positive definite.
double gaussian_kl(const GaussianBelief& p, const GaussianBelief& q);

}  // namespace mavf
