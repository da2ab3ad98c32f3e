#pragma once

#include "mavf/models.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace mavf {

struct GraphSpec {
  enum class Mode { kRadius, kEdges };
  Mode mode = Mode::kRadius;
  double radius_m = 3000.0;
  std::vector<std::pair<int, int>> edges;
};

struct TrajectorySpec {
  enum class Mode { kModel, kWaypoints };
  Mode mode = Mode::kModel;
  std::string file;  // waypoint CSV as given in the config
  double speed_mps = 20.0;
  std::vector<Eigen::Vector2d> waypoints;  // loaded from `file`
};

struct MissionConfig {
  int owner = 0;
  double requirement_m = 10.0;  // position-error requirement; g's level is its square
};

struct FlowPlacement {
  std::string label;
  int owner = 0;
  double requirement_m = 10.0;
};

/// How received beliefs are pooled into the next prior. kSum adds every
/// information matrix as-is; kNormalized weights each input by 1/(1 + |received|);
/// kNone keeps the agent's own posterior.
enum class LogopWeighting { kNormalized, kSum, kNone };

/// Everything needed to run one experiment.
struct Scenario {
  double delta = 1.0;
  int horizon = 3;
  double rho = 1.0;
  double gamma = 0.0;
  std::vector<double> gamma_grid;
  int steps = 200;
  int runs = 20;
  std::uint64_t seed = 1;
  double q_scale = 1.0;
  int inner_iters = 1;
  int threads = 0;  // 0: hardware concurrency
  LogopWeighting logop = LogopWeighting::kNormalized;
  bool mission_uncertainty = true;  // add the neighborhood position variance to g

  std::vector<Sensor> nodes;
  GraphSpec graph;
  std::vector<MissionConfig> missions;
  std::vector<FlowPlacement> flow_placements;

  Vec initial_truth;
  Vec prior_mean;
  Mat prior_cov;
  TrajectorySpec trajectory;

  /// Index of node `id` in `nodes`, or -1.
  int node_index(int id) const;
};

/// Desk-scale default: 10 nodes (5 TOA, 5 DOA) on a 10 km x 8 km field.
Scenario default_scenario();

/// Throws ConfigError naming the offending field.
void validate_scenario(const Scenario& s);

/// Parses a JSON scenario. Relative waypoint paths resolve against `base_dir`.
/// Unknown keys are errors. Throws ConfigError.
Scenario parse_scenario(const std::string& text, const std::filesystem::path& base_dir = {});

/// Reads and parses a scenario file. Throws IoError / ConfigError.
Scenario load_scenario(const std::filesystem::path& path);

/// Serializes a scenario to JSON text that `parse_scenario` accepts.
std::string scenario_to_json(const Scenario& s);

}  // namespace mavf
