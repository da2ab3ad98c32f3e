#pragma once

#include "mavf/netsim.hpp"
#include "mavf/scenario.hpp"

#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace mavf {

struct RunOutput {
  std::uint64_t seed = 0;
  std::vector<RoundLog> logs;
};

/// Aggregates over Monte Carlo runs. Per-run vectors are indexed [run][node].
struct Metrics {
  std::vector<int> node_ids;
  std::vector<double> node_rmse;     // mean over runs of each run's position RMSE [m]
  std::vector<double> node_tx_rate;  // mean over runs
  double network_tx_rate = 0.0;
  double mean_error = 0.0;           // network average of node_rmse
  double min_node_error = 0.0;
  double max_node_error = 0.0;
  std::vector<std::vector<double>> running_error;  // [node][step], mean over runs
  std::vector<std::vector<double>> run_node_rmse;
  std::vector<std::vector<double>> run_node_tx_rate;
  std::vector<std::vector<double>> run_final_running_error;
  std::vector<double> run_network_tx_rate;
  double min_phi = 0.0;  // smallest mission dual seen anywhere
  bool mission_converged = true;

  int node_position(int id) const;
};

struct ScenarioResult {
  Metrics metrics;
  std::vector<RunOutput> runs;
};

/// One simulation with `seed`, all steps.
RunOutput run_single(const Scenario& s, std::uint64_t seed);

/// Runs seeds seed, seed+1, ... (parallel across runs) and aggregates.
ScenarioResult run_scenario(const Scenario& s);

/// Throws std::logic_error when there are no runs or no steps.
Metrics compute_metrics(std::span<const RunOutput> runs);

struct SweepRow {
  double gamma = 0.0;
  double mean_err_m = 0.0;
  double min_node_err_m = 0.0;
  double max_node_err_m = 0.0;
  double mean_tx_rate = 0.0;
  std::vector<double> run_tx_rate;
  std::vector<double> run_mean_err_m;
};

/// One row per gamma, every row from the same seed set. `traces`, if given,
/// receives each gamma's full result.
std::vector<SweepRow> sweep_gamma(const Scenario& s, std::span<const double> grid,
                                  std::vector<ScenarioResult>* traces = nullptr);

struct MissionReport {
  int owner = 0;
  double requirement_m = 0.0;
  ScenarioResult aware;
  ScenarioResult agnostic;
  std::vector<double> aware_final_error;     // owner running-average error at the last step, per run
  std::vector<double> agnostic_final_error;
  int aware_satisfied = 0;      // runs meeting the requirement
  int agnostic_satisfied = 0;
  int separated = 0;            // runs where aware meets it and agnostic does not
};

/// Runs the identical seed set with the mission on `owner` and without any mission.
MissionReport mission_experiment(const Scenario& s, int owner, double requirement_m);

struct FlowRow {
  std::string placement_label;
  int node = 0;
  double tx_rate = 0.0;
  double network_rate = 0.0;
};

struct FlowReport {
  std::vector<FlowRow> rows;
  std::vector<double> network_rate;               // per placement
  std::vector<std::vector<double>> run_network_rate;  // [placement][run]
};

/// Per-node transmission rates for each mission placement.
FlowReport flow_analysis(const Scenario& s, std::span<const FlowPlacement> placements);

void write_trace_csv(std::ostream& out, std::span<const RunOutput> runs);
void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows);
void write_flow_csv(std::ostream& out, std::span<const FlowRow> rows);

/// Writes `content` to `path` atomically (temp file + rename). Throws IoError.
void write_file(const std::string& path, const std::string& content);

}  // namespace mavf
