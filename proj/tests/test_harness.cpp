#include "doctest.h"
#include "support.hpp"

#include "mavf/error.hpp"
#include "mavf/harness.hpp"
#include "mavf/scenario.hpp"

#include <fstream>
#include <sstream>

using namespace mavf;

namespace {

Scenario tiny(int nodes, int steps, int runs) {
  Scenario s = default_scenario();
  s.nodes.resize(static_cast<std::size_t>(nodes));
  s.steps = steps;
  s.runs = runs;
  s.graph.radius_m = 5000.0;
  s.threads = 1;
  return s;
}

RunOutput synthetic_run(const std::vector<std::vector<double>>& errs, const std::vector<std::vector<int>>& tx) {
  RunOutput r;
  for (std::size_t k = 0; k < errs.size(); ++k) {
    RoundLog log;
    log.step = static_cast<int>(k) + 1;
    for (std::size_t i = 0; i < errs[k].size(); ++i) {
      AgentRecord a;
      a.node = static_cast<int>(i);
      a.err_pos_m = errs[k][i];
      a.decisions = 1;
      a.transmitted = tx[k][i];
      log.agents.push_back(a);
    }
    r.logs.push_back(log);
  }
  return r;
}

std::string csv_of(const std::vector<RunOutput>& runs) {
  std::ostringstream out;
  write_trace_csv(out, runs);
  return out.str();
}

std::string minimal_json(const std::string& extra = "") {
  return R"({"nodes": [{"id": 0, "kind": "TOA", "x": 0, "y": 0, "noise_std": 10}])" + extra + "}";
}

}  // namespace

TEST_CASE("metrics by hand") {
  // Two nodes, two steps, two runs.
  const RunOutput a = synthetic_run({{3, 1}, {4, 1}}, {{1, 0}, {1, 0}});
  const RunOutput b = synthetic_run({{0, 2}, {0, 2}}, {{0, 1}, {1, 1}});
  const std::vector<RunOutput> runs{a, b};
  const Metrics m = compute_metrics(runs);
  const double rmse0 = (std::sqrt(12.5) + 0.0) / 2.0;
  const double rmse1 = (1.0 + 2.0) / 2.0;
  CHECK(m.node_rmse[0] == doctest::Approx(rmse0));
  CHECK(m.node_rmse[1] == doctest::Approx(rmse1));
  CHECK(m.node_tx_rate[0] == doctest::Approx(0.75));
  CHECK(m.node_tx_rate[1] == doctest::Approx(0.5));
  CHECK(m.network_tx_rate == doctest::Approx(0.625));
  CHECK(m.mean_error == doctest::Approx((rmse0 + rmse1) / 2.0));
  CHECK(m.min_node_error == doctest::Approx(std::min(rmse0, rmse1)));
  CHECK(m.max_node_error == doctest::Approx(std::max(rmse0, rmse1)));
  CHECK(m.running_error[0][1] == doctest::Approx((3.5 + 0.0) / 2.0));
  CHECK(m.run_final_running_error[0][0] == doctest::Approx(3.5));
  CHECK(m.run_network_tx_rate[1] == doctest::Approx(0.75));
}

TEST_CASE("zero steps yields empty logs") {
  Scenario s = tiny(3, 0, 2);
  const ScenarioResult res = run_scenario(s);
  REQUIRE(res.runs.size() == 2);
  for (const auto& r : res.runs) CHECK(r.logs.empty());
  CHECK_THROWS_AS(compute_metrics(res.runs), std::logic_error);
  CHECK_THROWS_AS(compute_metrics(std::vector<RunOutput>{}), std::logic_error);
  CHECK(csv_of(res.runs) == "run,step,node,est_x,est_y,err_pos_m,voi,transmitted,phi_own,g_val\n");
}

TEST_CASE("uncensored single node metrics follow its log") {
  Scenario s = tiny(1, 20, 1);
  s.gamma = 0.0;
  const ScenarioResult res = run_scenario(s);
  double sq = 0.0;
  for (const auto& log : res.runs[0].logs) sq += log.agents[0].err_pos_m * log.agents[0].err_pos_m;
  CHECK(res.metrics.node_rmse[0] == doctest::Approx(std::sqrt(sq / 20.0)));
  CHECK(res.metrics.network_tx_rate == 1.0);
}

TEST_CASE("runs are reproducible and thread-count independent") {
  Scenario s = tiny(4, 15, 3);
  s.gamma = 0.3;
  const std::string one = csv_of(run_scenario(s).runs);
  CHECK(one == csv_of(run_scenario(s).runs));
  s.threads = 3;
  CHECK(one == csv_of(run_scenario(s).runs));
  s.seed = 2;
  CHECK(one != csv_of(run_scenario(s).runs));
}

TEST_CASE("trace rows") {
  Scenario s = tiny(3, 4, 2);
  const std::string csv = csv_of(run_scenario(s).runs);
  int lines = 0;
  for (char c : csv) lines += c == '\n';
  CHECK(lines == 1 + 2 * 4 * 3);
  CHECK(csv.find("\n0,1,0,") != std::string::npos);
  CHECK(csv.find("\n1,4,2,") != std::string::npos);
}

TEST_CASE("gamma sweep") {
  Scenario s = tiny(5, 25, 3);
  const std::vector<double> grid{0.0, 0.5, 2.0, 8.0};
  std::vector<ScenarioResult> traces;
  const auto rows = sweep_gamma(s, grid, &traces);
  REQUIRE(rows.size() == grid.size());
  CHECK(traces.size() == grid.size());
  CHECK(rows[0].mean_tx_rate == 1.0);
  for (std::size_t g = 0; g < rows.size(); ++g) {
    CHECK(rows[g].gamma == grid[g]);
    CHECK(rows[g].run_tx_rate.size() == 3);
    if (g > 0) {
      for (std::size_t r = 0; r < 3; ++r) CHECK(rows[g].run_tx_rate[r] <= rows[g - 1].run_tx_rate[r]);
    }
  }
  std::ostringstream out;
  write_sweep_csv(out, rows);
  CHECK(out.str().rfind("gamma,mean_err_m,min_node_err_m,max_node_err_m,mean_tx_rate\n", 0) == 0);
  CHECK_THROWS_AS(sweep_gamma(s, std::vector<double>{1.0, 0.5}), ConfigError);
  CHECK_THROWS_AS(sweep_gamma(s, std::vector<double>{}), ConfigError);
}

TEST_CASE("mission-agnostic arm equals a run without missions") {
  Scenario s = tiny(4, 20, 2);
  s.gamma = 0.5;
  const MissionReport report = mission_experiment(s, 1, 50.0);
  CHECK(report.owner == 1);
  Scenario plain = s;
  plain.missions.clear();
  CHECK(csv_of(report.agnostic.runs) == csv_of(run_scenario(plain).runs));
  CHECK(report.aware_final_error.size() == 2);
  int sep = 0;
  for (std::size_t r = 0; r < 2; ++r) {
    sep += report.aware_final_error[r] <= 50.0 && report.agnostic_final_error[r] > 50.0;
  }
  CHECK(report.separated == sep);
  CHECK_THROWS_AS(mission_experiment(s, 99, 50.0), ConfigError);
}

TEST_CASE("flow analysis rows") {
  Scenario s = tiny(4, 10, 2);
  s.gamma = 0.5;
  const std::vector<FlowPlacement> placements{{"a", 0, 30.0}, {"b", 3, 30.0}};
  const FlowReport report = flow_analysis(s, placements);
  CHECK(report.rows.size() == 2 * 4);
  CHECK(report.network_rate.size() == 2);
  CHECK(report.run_network_rate[1].size() == 2);
  CHECK(report.rows[4].placement_label == "b");
  for (const auto& row : report.rows) {
    CHECK(row.tx_rate >= 0.0);
    CHECK(row.tx_rate <= 1.0);
  }
  std::ostringstream out;
  write_flow_csv(out, report.rows);
  CHECK(out.str().rfind("placement_label,node,tx_rate,network_rate\n", 0) == 0);
}

TEST_CASE("write_file") {
  const auto dir = testing::scratch_dir("write_file");
  const auto path = (dir / "x.txt").string();
  write_file(path, "abc");
  CHECK(testing::read_file(path) == "abc");
  write_file(path, "de");
  CHECK(testing::read_file(path) == "de");
  CHECK_THROWS_AS(write_file((dir / "missing" / "x.txt").string(), "q"), IoError);
}

TEST_CASE("scenario parsing") {
  const Scenario s = parse_scenario(minimal_json());
  CHECK(s.nodes.size() == 1);
  CHECK(s.nodes[0].kind == SensorKind::kToa);

  auto path_of = [](const std::string& text) {
    try {
      parse_scenario(text);
    } catch (const ConfigError& e) {
      return e.path();
    }
    return std::string("<none>");
  };
  CHECK(path_of(minimal_json(R"(, "bogus": 1)")) == "bogus");
  CHECK(path_of(R"({"nodes": [{"id": 0, "kind": "TOA", "x": 0, "y": 0, "noise_std": 10, "extra": 2}]})") ==
        "nodes[0].extra");
  CHECK(path_of(R"({"nodes": [{"id": 0, "kind": "SONAR", "x": 0, "y": 0, "noise_std": 10}]})") == "nodes[0].kind");
  CHECK(path_of(R"({"nodes": [{"id": 0, "kind": "TOA", "x": 0, "y": 0, "noise_std": -1}]})") ==
        "nodes[0].noise_std");
  CHECK(path_of(minimal_json(R"(, "rho": 0)")) == "rho");
  CHECK(path_of(minimal_json(R"(, "gamma": -1)")) == "gamma");
  CHECK(path_of(minimal_json(R"(, "horizon": "3")")) == "horizon");
  CHECK(path_of(minimal_json(R"(, "gamma_grid": [1, 0.5])")) == "gamma_grid");
  CHECK(path_of(minimal_json(R"(, "missions": [{"owner": 5, "requirement_m": 10}])")) != "<none>");
  CHECK(path_of(minimal_json(R"(, "graph": {"mode": "radius", "radius_m": 10, "edges": []})")) == "graph.edges");
  CHECK(path_of(minimal_json(R"(, "logop": "max")")) == "logop");
  CHECK(path_of("{not json") == "");
  CHECK_THROWS_AS(parse_scenario(R"({"nodes": []})"), ConfigError);
  CHECK_NOTHROW(parse_scenario(minimal_json(R"(, "gamma": "inf")")));
}

TEST_CASE("scenario JSON round trip") {
  Scenario s = default_scenario();
  s.missions = {MissionConfig{3, 42.0}};
  s.flow_placements = {{"x", 1, 10.0}};
  s.gamma_grid = {0.0, 1.0};
  s.logop = LogopWeighting::kSum;
  const std::string text = scenario_to_json(s);
  const Scenario back = parse_scenario(text);
  CHECK(scenario_to_json(back) == text);
  CHECK(back.missions[0].owner == 3);
  CHECK(back.logop == LogopWeighting::kSum);
  CHECK(back.prior_cov == s.prior_cov);
}

TEST_CASE("scenario files") {
  const auto dir = testing::scratch_dir("scenario_files");
  {
    std::ofstream wp(dir / "legs.csv");
    wp << "x,y\n0,0\n100,0\n";
  }
  {
    std::ofstream cfg(dir / "cfg.json");
    cfg << minimal_json(R"(, "trajectory": {"mode": "waypoints", "file": "legs.csv", "speed_mps": 5})");
  }
  const Scenario s = load_scenario(dir / "cfg.json");
  CHECK(s.trajectory.waypoints.size() == 2);
  CHECK(s.trajectory.waypoints[1].x() == 100.0);
  CHECK_THROWS_AS(load_scenario(dir / "absent.json"), IoError);
  {
    std::ofstream cfg(dir / "bad.json");
    cfg << minimal_json(R"(, "trajectory": {"mode": "waypoints", "file": "nope.csv"})");
  }
  CHECK_THROWS_AS(load_scenario(dir / "bad.json"), ConfigError);
}
