#include "mavf/gaussian.hpp"

#include "mavf/error.hpp"

#include <algorithm>
#include <stdexcept>

namespace mavf {

double gaussian_kl(const GaussianBelief& p, const GaussianBelief& q) {
  const auto k = p.dim();
  if (q.dim() != k || p.cov.rows() != k || p.cov.cols() != k || q.cov.rows() != k || q.cov.cols() != k) {
    throw std::invalid_argument("gaussian_kl: dimension mismatch");
  }
  Eigen::LLT<Mat> lp(p.cov);
  Eigen::LLT<Mat> lq(q.cov);
  if (lp.info() != Eigen::Success || lq.info() != Eigen::Success) {
    throw NumericError("gaussian_kl: covariance is not positive definite");
  }
  const Mat Lp = lp.matrixL();
  const Mat Lq = lq.matrixL();

  // tr(Sq^-1 Sp) = ||Lq^-1 Lp||_F^2
  const Mat S = lq.matrixL().solve(Lp);
  const double trace_term = S.squaredNorm();
  const Vec diff = q.mean - p.mean;
  const Vec u = lq.matrixL().solve(diff);
  const double mahalanobis = u.squaredNorm();
  const double logdet_q = 2.0 * Lq.diagonal().array().log().sum();
  const double logdet_p = 2.0 * Lp.diagonal().array().log().sum();
  const double kl = 0.5 * (trace_term + mahalanobis - static_cast<double>(k) + logdet_q - logdet_p);
  // Rounding can leave tiny negatives for identical inputs.
  return std::max(kl, 0.0);
}

}  // namespace mavf
