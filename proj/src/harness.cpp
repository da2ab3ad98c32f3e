#include "mavf/harness.hpp"

#include "mavf/error.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace mavf {

namespace {

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

int worker_count(const Scenario& s) {
  int threads = s.threads;
  if (threads == 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  return std::max(1, std::min(threads, s.runs));
}

}  // namespace

int Metrics::node_position(int id) const {
  const auto it = std::find(node_ids.begin(), node_ids.end(), id);
  return it == node_ids.end() ? -1 : static_cast<int>(it - node_ids.begin());
}

RunOutput run_single(const Scenario& s, std::uint64_t seed) {
  RunOutput out;
  out.seed = seed;
  Simulation sim(s, seed);
  out.logs.reserve(static_cast<std::size_t>(s.steps));
  for (int k = 0; k < s.steps; ++k) out.logs.push_back(sim.run_round());
  return out;
}

ScenarioResult run_scenario(const Scenario& s) {
  validate_scenario(s);
  ScenarioResult result;
  result.runs.resize(static_cast<std::size_t>(s.runs));

  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (int r = next++; r < s.runs; r = next++) {
      try {
        result.runs[static_cast<std::size_t>(r)] = run_single(s, s.seed + static_cast<std::uint64_t>(r));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int workers = worker_count(s);
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  if (s.steps > 0) result.metrics = compute_metrics(result.runs);
  return result;
}

Metrics compute_metrics(std::span<const RunOutput> runs) {
  if (runs.empty()) throw std::logic_error("compute_metrics: no runs");
  const std::size_t steps = runs.front().logs.size();
  if (steps == 0) throw std::logic_error("compute_metrics: no steps were simulated");

  Metrics m;
  for (const auto& a : runs.front().logs.front().agents) m.node_ids.push_back(a.node);
  const std::size_t nodes = m.node_ids.size();
  const auto run_count = static_cast<double>(runs.size());

  m.node_rmse.assign(nodes, 0.0);
  m.node_tx_rate.assign(nodes, 0.0);
  m.running_error.assign(nodes, std::vector<double>(steps, 0.0));
  m.min_phi = std::numeric_limits<double>::infinity();

  for (const auto& run : runs) {
    if (run.logs.size() != steps) throw std::logic_error("compute_metrics: runs differ in length");
    std::vector<double> sq(nodes, 0.0), cumulative(nodes, 0.0), final_running(nodes, 0.0);
    for (std::size_t k = 0; k < steps; ++k) {
      const auto& agents = run.logs[k].agents;
      for (std::size_t i = 0; i < nodes; ++i) {
        const double e = agents[i].err_pos_m;
        sq[i] += e * e;
        cumulative[i] += e;
        const double running = cumulative[i] / static_cast<double>(k + 1);
        m.running_error[i][k] += running / run_count;
        final_running[i] = running;
        m.min_phi = std::min(m.min_phi, agents[i].phi_min);
        m.mission_converged = m.mission_converged && agents[i].mission_converged;
      }
    }
    const TransmissionStats stats = account(run.logs);
    std::vector<double> rmse(nodes), rate(nodes);
    for (std::size_t i = 0; i < nodes; ++i) {
      rmse[i] = std::sqrt(sq[i] / static_cast<double>(steps));
      rate[i] = stats.node_rate(i);
      m.node_rmse[i] += rmse[i] / run_count;
      m.node_tx_rate[i] += rate[i] / run_count;
    }
    m.run_node_rmse.push_back(rmse);
    m.run_node_tx_rate.push_back(rate);
    m.run_final_running_error.push_back(final_running);
    m.run_network_tx_rate.push_back(stats.network_rate());
  }
  if (!std::isfinite(m.min_phi)) m.min_phi = 0.0;

  double total = 0.0;
  for (double r : m.node_tx_rate) total += r;
  m.network_tx_rate = total / static_cast<double>(nodes);
  total = 0.0;
  for (double e : m.node_rmse) total += e;
  m.mean_error = total / static_cast<double>(nodes);
  m.min_node_error = *std::min_element(m.node_rmse.begin(), m.node_rmse.end());
  m.max_node_error = *std::max_element(m.node_rmse.begin(), m.node_rmse.end());
  return m;
}

std::vector<SweepRow> sweep_gamma(const Scenario& s, std::span<const double> grid,
                                  std::vector<ScenarioResult>* traces) {
  if (grid.empty()) throw ConfigError("gamma_grid", "must not be empty");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (grid[i] < grid[i - 1]) throw ConfigError("gamma_grid", "must be sorted ascending");
  }
  std::vector<SweepRow> rows;
  for (double gamma : grid) {
    Scenario sg = s;
    sg.gamma = gamma;
    ScenarioResult res = run_scenario(sg);
    SweepRow row;
    row.gamma = gamma;
    row.mean_err_m = res.metrics.mean_error;
    row.min_node_err_m = res.metrics.min_node_error;
    row.max_node_err_m = res.metrics.max_node_error;
    row.mean_tx_rate = res.metrics.network_tx_rate;
    row.run_tx_rate = res.metrics.run_network_tx_rate;
    for (const auto& per_node : res.metrics.run_node_rmse) {
      double sum = 0.0;
      for (double e : per_node) sum += e;
      row.run_mean_err_m.push_back(sum / static_cast<double>(per_node.size()));
    }
    rows.push_back(std::move(row));
    if (traces) traces->push_back(std::move(res));
  }
  return rows;
}

MissionReport mission_experiment(const Scenario& s, int owner, double requirement_m) {
  if (s.node_index(owner) < 0) throw ConfigError("missions.owner", "unknown node id " + std::to_string(owner));
  MissionReport report;
  report.owner = owner;
  report.requirement_m = requirement_m;

  Scenario aware = s;
  aware.missions = {MissionConfig{owner, requirement_m}};
  Scenario agnostic = s;
  agnostic.missions.clear();
  report.aware = run_scenario(aware);
  report.agnostic = run_scenario(agnostic);

  const int pos = report.aware.metrics.node_position(owner);
  for (std::size_t r = 0; r < report.aware.runs.size(); ++r) {
    const double a = report.aware.metrics.run_final_running_error[r][static_cast<std::size_t>(pos)];
    const double g = report.agnostic.metrics.run_final_running_error[r][static_cast<std::size_t>(pos)];
    report.aware_final_error.push_back(a);
    report.agnostic_final_error.push_back(g);
    report.aware_satisfied += a <= requirement_m ? 1 : 0;
    report.agnostic_satisfied += g <= requirement_m ? 1 : 0;
    report.separated += (a <= requirement_m && g > requirement_m) ? 1 : 0;
  }
  return report;
}

FlowReport flow_analysis(const Scenario& s, std::span<const FlowPlacement> placements) {
  FlowReport report;
  for (const auto& p : placements) {
    if (s.node_index(p.owner) < 0) throw ConfigError("flow_placements.owner", "unknown node id " + std::to_string(p.owner));
    Scenario sp = s;
    sp.missions = {MissionConfig{p.owner, p.requirement_m}};
    const ScenarioResult res = run_scenario(sp);
    for (std::size_t i = 0; i < res.metrics.node_ids.size(); ++i) {
      report.rows.push_back(FlowRow{p.label, res.metrics.node_ids[i], res.metrics.node_tx_rate[i], res.metrics.network_tx_rate});
    }
    report.network_rate.push_back(res.metrics.network_tx_rate);
    report.run_network_rate.push_back(res.metrics.run_network_tx_rate);
  }
  return report;
}

void write_trace_csv(std::ostream& out, std::span<const RunOutput> runs) {
  out << "run,step,node,est_x,est_y,err_pos_m,voi,transmitted,phi_own,g_val\n";
  for (std::size_t r = 0; r < runs.size(); ++r) {
    for (const auto& log : runs[r].logs) {
      for (const auto& a : log.agents) {
        out << r << ',' << log.step << ',' << a.node << ',' << fmt("%.6f", a.estimate.x()) << ','
            << fmt("%.6f", a.estimate.y()) << ',' << fmt("%.6f", a.err_pos_m) << ',' << fmt("%.9g", a.voi) << ','
            << a.transmitted << ',' << fmt("%.9g", a.phi_own) << ',' << fmt("%.9g", a.g_val) << '\n';
      }
    }
  }
}

void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows) {
  out << "gamma,mean_err_m,min_node_err_m,max_node_err_m,mean_tx_rate\n";
  for (const auto& r : rows) {
    out << fmt("%.9g", r.gamma) << ',' << fmt("%.6f", r.mean_err_m) << ',' << fmt("%.6f", r.min_node_err_m) << ','
        << fmt("%.6f", r.max_node_err_m) << ',' << fmt("%.6f", r.mean_tx_rate) << '\n';
  }
}

void write_flow_csv(std::ostream& out, std::span<const FlowRow> rows) {
  out << "placement_label,node,tx_rate,network_rate\n";
  for (const auto& r : rows) {
    out << r.placement_label << ',' << r.node << ',' << fmt("%.6f", r.tx_rate) << ',' << fmt("%.6f", r.network_rate) << '\n';
  }
}

void write_file(const std::string& path, const std::string& content) {
  const std::filesystem::path target(path);
  const std::filesystem::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << content;
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, target, ec);
  if (ec) throw IoError("cannot move " + tmp.string() + " to " + target.string() + ": " + ec.message());
}

}  // namespace mavf
