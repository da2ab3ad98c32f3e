#pragma once

#include "mavf/gaussian.hpp"
#include "mavf/window.hpp"

#include <map>
#include <span>

namespace mavf {

/// Mission requirement g(x) = ||M x - m||^2 + offset <= c held by agent `owner`.
/// The offset does not depend on x; it carries uncertainty about m into g.
struct MissionSpec {
  int owner = 0;
  double c = 1.0;  // units of g
  Mat M;
  Vec m;
  double offset = 0.0;

  double value(const Vec& x) const;
  Vec gradient(const Vec& x) const;
};

/// Mission on the position components of the newest window slot, with target `m`.
MissionSpec newest_position_mission(int owner, double c, int horizon, int state_dim,
                                    const Eigen::Vector2d& target, double offset = 0.0);

/// Last payload received from a neighbor, aligned with the current window.
struct NeighborView {
  RollingWindow window;
  std::map<int, double> phi;
};

struct AgentState {
  int id = 0;
  RollingWindow estimate;   // own ADMM iterate and its covariance
  RollingWindow prior;      // LogOP-merged prior
  Vec lambda;               // aggregated consensus dual
  std::map<int, double> phi;           // mission owner id -> dual (own or copy)
  std::map<int, double> phi_reported;  // phi as last transmitted to the neighbors
  std::map<int, NeighborView> neighbors;
};

/// Neighbor window means in ascending neighbor-id order.
std::vector<Vec> neighbor_means(const AgentState& state);

/// Exact minimizer of
///   ||C x - r||^2_{W^-1} + lambda^T x + rho sum_j ||x - (own + x_j) / 2||^2.
/// Throws NumericError when the normal matrix is singular.
Vec primal_update(const StackedSystem& sys, double rho, const Vec& lambda, const Vec& own,
                  std::span<const Vec> neighbors);

double primal_objective(const StackedSystem& sys, double rho, const Vec& lambda, const Vec& own,
                        std::span<const Vec> neighbors, const Vec& x);

struct MissionPrimalResult {
  Vec x;
  double objective = 0.0;
  int iterations = 0;
  bool converged = true;
};

/// Primal objective plus (rho/2) ([g(x) - c + phi]^+)^2, minimized by
/// safeguarded Gauss-Newton steps starting at the plain primal solution.
MissionPrimalResult primal_update_mission(const StackedSystem& sys, double rho, const Vec& lambda,
                                          const Vec& own, std::span<const Vec> neighbors,
                                          const MissionSpec& mission, double phi);

double mission_objective(const StackedSystem& sys, double rho, const Vec& lambda, const Vec& own,
                         std::span<const Vec> neighbors, const MissionSpec& mission, double phi,
                         const Vec& x);

/// (C^T W^-1 C)^-1, symmetrized.
Mat covariance_update(const StackedSystem& sys);

/// lambda + rho sum_j (own - x_j)
Vec dual_update(const Vec& lambda, double rho, const Vec& own, std::span<const Vec> neighbors);

/// [phi + rho (g - c)]^+
double mission_dual_update(double phi, double rho, double g_val, double c);

/// Logarithmic opinion pool: informations add, mean is information weighted.
/// With `normalized`, every input carries weight 1/(1 + received.size()), so
/// the merged information is the average rather than the sum.
GaussianBelief logop_merge(const GaussianBelief& own, std::span<const GaussianBelief> received,
                           bool normalized = false);

/// Averages received copies of every mission dual this agent does not own.
std::map<int, double> phi_consensus(int self_id, const std::map<int, double>& own,
                                    std::span<const std::map<int, double>> received);

}  // namespace mavf
