#pragma once

#include "mavf/agent.hpp"
#include "mavf/censoring.hpp"
#include "mavf/scenario.hpp"

#include <map>
#include <optional>
#include <span>
#include <vector>

namespace mavf {

struct NetworkGraph {
  std::vector<int> nodes;
  std::vector<std::pair<int, int>> edges;  // i < j
  std::map<int, std::vector<int>> adjacency;  // ascending neighbor ids
  bool connected = true;

  const std::vector<int>& neighbors(int id) const;
  int degree(int id) const { return static_cast<int>(neighbors(id).size()); }
};

/// Radius mode links pairs within `radius_m`; edge mode validates the list.
/// Connectivity is reported, not enforced. Throws ConfigError on malformed
/// edges (unknown ids, self-loops, duplicates) or coincident positions in
/// radius mode.
NetworkGraph build_graph(std::span<const int> ids, std::span<const Eigen::Vector2d> positions,
                         const GraphSpec& spec);

struct AgentRecord {
  int node = 0;
  Eigen::Vector2d estimate = Eigen::Vector2d::Zero();
  double err_pos_m = 0.0;
  double voi = 0.0;          // VoI of the last decision this round
  int transmitted = 0;       // transmissions this round
  int decisions = 0;         // VoI decisions this round (inner iterations)
  double phi_own = 0.0;      // own mission dual, 0 for non-owners
  double g_val = 0.0;        // mission function at the new iterate, 0 for non-owners
  double phi_min = 0.0;      // smallest mission dual held (own or copy)
  bool measured = false;
  bool mission_converged = true;
};

struct RoundLog {
  int step = 0;
  std::vector<AgentRecord> agents;  // ascending node id
};

struct TransmissionStats {
  std::vector<int> node_ids;
  std::vector<long> transmits;
  std::vector<long> decisions;

  double node_rate(std::size_t i) const;
  double network_rate() const;  // mean of node rates
};

/// Recounts transmission statistics from logs.
TransmissionStats account(std::span<const RoundLog> logs);

/// Synchronous-round simulation of the censored, mission-aware distributed filter.
class Simulation {
 public:
  Simulation(const Scenario& scenario, std::uint64_t seed);

  /// Executes one round (step k = step() + 1) and returns its log.
  RoundLog run_round();

  int step() const { return step_; }
  const Vec& truth() const { return truth_; }
  const NetworkGraph& graph() const { return graph_; }
  const std::vector<AgentState>& agents() const { return agents_; }
  std::vector<AgentState>& mutable_agents() { return agents_; }
  const TransmissionStats& stats() const { return stats_; }
  const ProcessModel& model() const { return model_; }

 private:
  struct Outgoing {
    Vec x;
    VoiDecision decision;
    double g_val = 0.0;
    bool mission_converged = true;
  };

  void advance_all();
  void propagate_truth_step();
  std::optional<MissionSpec> mission_for(const AgentState& a) const;

  Scenario scenario_;
  ProcessModel model_;
  NetworkGraph graph_;
  std::vector<AgentState> agents_;
  std::map<int, double> requirement_;  // owner -> c (units of g)
  Rng rng_;
  Vec truth_;
  int step_ = 0;
  std::size_t waypoint_leg_ = 0;
  double waypoint_offset_ = 0.0;
  TransmissionStats stats_;
};

/// Result of iterating ADMM on a fixed set of per-agent systems with full communication.
struct ConsensusTrace {
  std::vector<Vec> estimates;      // final x^i, in graph node order
  std::vector<double> disagreement;  // max_{i,j} ||x^i - x^j|| after each iteration
  int iterations = 0;
};

/// Static ADMM iterations: primal with the current duals, then dual ascent with
/// the fresh iterates. Stops once disagreement < tol or after max_iters.
ConsensusTrace run_static_consensus(std::span<const StackedSystem> systems, const NetworkGraph& graph,
                                    double rho, int max_iters, double tol);

}  // namespace mavf
