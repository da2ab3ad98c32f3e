// Command-line front end over the C interface.
#include "mavf/mavf.h"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitValidation = 2;
constexpr int kExitIo = 3;

struct Options {
  std::string config;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  std::optional<std::string> gamma;
  std::optional<std::string> gamma_grid;
  std::optional<int> runs;
  std::optional<int> threads;
  bool traces = false;
  bool quiet = false;
};

using ScenarioPtr = std::unique_ptr<mavf_scenario, decltype(&mavf_scenario_free)>;

int exit_code(mavf_status status) {
  switch (status) {
    case MAVF_OK: return kExitOk;
    case MAVF_ERR_VALIDATION: return kExitValidation;
    case MAVF_ERR_IO: return kExitIo;
    default: return kExitConfig;
  }
}

int report_failure(mavf_status status) {
  std::cerr << "error: " << mavf_last_error() << '\n';
  return exit_code(status);
}

double parse_gamma(const std::string& text) {
  std::size_t used = 0;
  const double v = std::stod(text, &used);
  if (used != text.size() || !(v >= 0.0)) throw std::invalid_argument("gamma must be a non-negative number or inf");
  return v;
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_gamma(item));
  if (out.empty()) throw std::invalid_argument("empty gamma grid");
  return out;
}

// Loads the scenario and applies overrides. Returns an exit code on failure.
std::optional<int> prepare(const Options& opt, ScenarioPtr& scenario) {
  mavf_scenario* raw = nullptr;
  if (const auto st = mavf_scenario_load(opt.config.c_str(), &raw); st != MAVF_OK) return report_failure(st);
  scenario.reset(raw);
  if (opt.seed) mavf_scenario_set_seed(raw, *opt.seed);
  if (opt.runs) {
    if (const auto st = mavf_scenario_set_runs(raw, *opt.runs); st != MAVF_OK) return report_failure(st);
  }
  if (opt.threads) {
    if (const auto st = mavf_scenario_set_threads(raw, *opt.threads); st != MAVF_OK) return report_failure(st);
  }
  if (opt.gamma) {
    try {
      if (const auto st = mavf_scenario_set_gamma(raw, parse_gamma(*opt.gamma)); st != MAVF_OK) return report_failure(st);
    } catch (const std::exception& e) {
      std::cerr << "error: --gamma: " << e.what() << '\n';
      return kExitConfig;
    }
  }
  std::error_code ec;
  std::filesystem::create_directories(opt.out, ec);
  if (ec) {
    std::cerr << "error: cannot create output directory " << opt.out << ": " << ec.message() << '\n';
    return kExitIo;
  }
  return std::nullopt;
}

int cmd_simulate(const Options& opt) {
  ScenarioPtr scenario(nullptr, mavf_scenario_free);
  if (auto rc = prepare(opt, scenario)) return *rc;
  mavf_run_summary summary{};
  if (const auto st = mavf_simulate(scenario.get(), opt.out.c_str(), &summary); st != MAVF_OK) return report_failure(st);
  if (!opt.quiet) {
    std::printf("runs=%d steps=%d nodes=%d mean_err_m=%.3f node_err_m=[%.3f, %.3f] tx_rate=%.3f\n", summary.runs,
                summary.steps, summary.nodes, summary.mean_error_m, summary.min_node_error_m, summary.max_node_error_m,
                summary.network_tx_rate);
  }
  return kExitOk;
}

int cmd_sweep(const Options& opt) {
  ScenarioPtr scenario(nullptr, mavf_scenario_free);
  if (auto rc = prepare(opt, scenario)) return *rc;
  std::vector<double> grid;
  if (opt.gamma_grid) {
    try {
      grid = parse_grid(*opt.gamma_grid);
    } catch (const std::exception& e) {
      std::cerr << "error: --gamma-grid: " << e.what() << '\n';
      return kExitConfig;
    }
  }
  const auto st = mavf_sweep(scenario.get(), grid.empty() ? nullptr : grid.data(), grid.size(), opt.out.c_str(),
                             opt.traces ? 1 : 0);
  if (st != MAVF_OK) return report_failure(st);
  if (!opt.quiet) std::printf("wrote %s\n", (std::filesystem::path(opt.out) / "sweep.csv").string().c_str());
  return kExitOk;
}

int cmd_mission(const Options& opt) {
  ScenarioPtr scenario(nullptr, mavf_scenario_free);
  if (auto rc = prepare(opt, scenario)) return *rc;
  mavf_mission_summary s{};
  if (const auto st = mavf_mission(scenario.get(), opt.out.c_str(), &s); st != MAVF_OK) return report_failure(st);
  std::printf("owner=%d requirement_m=%.3f runs=%d\n", s.owner, s.requirement_m, s.runs);
  std::printf("mission-aware:    final_running_avg_err_m=%.3f satisfied=%d/%d tx_rate=%.3f verdict=%s\n",
              s.aware_final_error_m, s.aware_satisfied_runs, s.runs, s.aware_network_tx_rate,
              s.aware_final_error_m <= s.requirement_m ? "SATISFIED" : "VIOLATED");
  std::printf("mission-agnostic: final_running_avg_err_m=%.3f satisfied=%d/%d tx_rate=%.3f verdict=%s\n",
              s.agnostic_final_error_m, s.agnostic_satisfied_runs, s.runs, s.agnostic_network_tx_rate,
              s.agnostic_final_error_m <= s.requirement_m ? "SATISFIED" : "VIOLATED");
  std::printf("runs where only the mission-aware filter satisfies the requirement: %d/%d\n", s.separated_runs, s.runs);
  return kExitOk;
}

int cmd_flow(const Options& opt) {
  ScenarioPtr scenario(nullptr, mavf_scenario_free);
  if (auto rc = prepare(opt, scenario)) return *rc;
  if (const auto st = mavf_flow(scenario.get(), opt.out.c_str()); st != MAVF_OK) return report_failure(st);
  if (!opt.quiet) std::printf("wrote %s\n", (std::filesystem::path(opt.out) / "flow.csv").string().c_str());
  return kExitOk;
}

void print_check(const char* name, int passed, const char* detail, void* user) {
  const bool quiet = *static_cast<bool*>(user);
  if (!quiet || !passed) std::printf("[%s] %s: %s\n", passed ? "PASS" : "FAIL", name, detail);
}

int cmd_validate(Options opt) {
  if (!opt.config.empty()) {
    mavf_scenario* raw = nullptr;
    if (const auto st = mavf_scenario_load(opt.config.c_str(), &raw); st != MAVF_OK) return report_failure(st);
    mavf_scenario_free(raw);
    if (!opt.quiet) std::printf("[PASS] config: %s parses and validates\n", opt.config.c_str());
  }
  const auto st = mavf_validate(print_check, &opt.quiet);
  if (st != MAVF_OK) return report_failure(st);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mission-aware VoI-censored distributed filter: simulations and experiments"};
  app.require_subcommand(1);
  Options opt;

  auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* c = sub->add_option("--config", opt.config, "Scenario JSON file");
    if (config_required) c->required()->check(CLI::ExistingFile);
    sub->add_option("--out", opt.out, "Output directory (created if missing)");
    sub->add_option("--seed", opt.seed, "Base seed override");
    sub->add_option("--runs", opt.runs, "Monte Carlo run count override");
    sub->add_option("--threads", opt.threads, "Worker threads (0: all cores)");
    sub->add_flag("--quiet", opt.quiet, "Suppress progress output");
  };

  auto* simulate = app.add_subcommand("simulate", "Run the scenario and write trace.csv");
  add_common(simulate, true);
  simulate->add_option("--gamma", opt.gamma, "Censoring threshold override (number or inf)");

  auto* sweep = app.add_subcommand("sweep", "Sweep the censoring threshold and write sweep.csv");
  add_common(sweep, true);
  sweep->add_option("--gamma-grid", opt.gamma_grid, "Comma-separated ascending thresholds");
  sweep->add_flag("--traces", opt.traces, "Also write trace_gamma_<i>.csv per threshold");

  auto* mission = app.add_subcommand("mission", "Compare mission-aware and mission-agnostic runs");
  add_common(mission, true);
  mission->add_option("--gamma", opt.gamma, "Censoring threshold override (number or inf)");

  auto* flow = app.add_subcommand("flow", "Per-node transmission rates for each mission placement");
  add_common(flow, true);
  flow->add_option("--gamma", opt.gamma, "Censoring threshold override (number or inf)");

  auto* validate = app.add_subcommand("validate", "Run the oracle cross-check suite");
  validate->add_option("--config", opt.config, "Optional scenario file to check as well");
  validate->add_flag("--quiet", opt.quiet, "Only print failures");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  if (simulate->parsed()) return cmd_simulate(opt);
  if (sweep->parsed()) return cmd_sweep(opt);
  if (mission->parsed()) return cmd_mission(opt);
  if (flow->parsed()) return cmd_flow(opt);
  return cmd_validate(opt);
}
