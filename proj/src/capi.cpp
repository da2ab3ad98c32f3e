#include "mavf/mavf.h"

#include "mavf/error.hpp"
#include "mavf/harness.hpp"
#include "mavf/netsim.hpp"
#include "mavf/scenario.hpp"
#include "mavf/validate.hpp"

#include <cstring>
#include <exception>
#include <filesystem>
#include <memory>
#include <new>
#include <optional>
#include <sstream>
#include <string>

struct mavf_scenario {
  mavf::Scenario value;
};

struct mavf_simulation {
  std::unique_ptr<mavf::Simulation> sim;
  std::optional<mavf::RoundLog> last;
};

namespace {

thread_local std::string g_last_error;

mavf_status fail(mavf_status code, const std::string& message) {
  g_last_error = message;
  return code;
}

template <typename F>
mavf_status guarded(F&& body) {
  try {
    return body();
  } catch (const mavf::ConfigError& e) {
    return fail(MAVF_ERR_CONFIG, e.what());
  } catch (const mavf::IoError& e) {
    return fail(MAVF_ERR_IO, e.what());
  } catch (const mavf::NumericError& e) {
    return fail(MAVF_ERR_NUMERIC, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(MAVF_ERR_CONFIG, e.what());
  } catch (const std::bad_alloc&) {
    return fail(MAVF_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(MAVF_ERR_INTERNAL, e.what());
  }
}

std::filesystem::path output_dir(const char* out_dir) {
  if (!out_dir) throw mavf::ConfigError("out", "output directory is null");
  std::filesystem::path dir(out_dir);
  if (!std::filesystem::is_directory(dir)) throw mavf::IoError("output directory does not exist: " + dir.string());
  return dir;
}

template <typename Writer, typename Data>
void write_csv(const std::filesystem::path& path, Writer&& writer, const Data& data) {
  std::ostringstream out;
  writer(out, data);
  mavf::write_file(path.string(), out.str());
}

}  // namespace

extern "C" {

const char* mavf_version(void) { return "1.0.0"; }

const char* mavf_last_error(void) { return g_last_error.c_str(); }

mavf_status mavf_scenario_default(mavf_scenario** out) {
  if (!out) return fail(MAVF_ERR_CONFIG, "null output handle");
  return guarded([&] {
    *out = new mavf_scenario{mavf::default_scenario()};
    return MAVF_OK;
  });
}

mavf_status mavf_scenario_load(const char* path, mavf_scenario** out) {
  if (!path || !out) return fail(MAVF_ERR_CONFIG, "null argument");
  return guarded([&] {
    *out = new mavf_scenario{mavf::load_scenario(path)};
    return MAVF_OK;
  });
}

mavf_status mavf_scenario_parse(const char* json_text, mavf_scenario** out) {
  if (!json_text || !out) return fail(MAVF_ERR_CONFIG, "null argument");
  return guarded([&] {
    *out = new mavf_scenario{mavf::parse_scenario(json_text)};
    return MAVF_OK;
  });
}

void mavf_scenario_free(mavf_scenario* scenario) { delete scenario; }

mavf_status mavf_scenario_set_seed(mavf_scenario* scenario, uint64_t seed) {
  if (!scenario) return fail(MAVF_ERR_CONFIG, "null scenario");
  scenario->value.seed = seed;
  return MAVF_OK;
}

mavf_status mavf_scenario_set_gamma(mavf_scenario* scenario, double gamma) {
  if (!scenario) return fail(MAVF_ERR_CONFIG, "null scenario");
  if (!(gamma >= 0.0)) return fail(MAVF_ERR_CONFIG, "gamma: must be >= 0");
  scenario->value.gamma = gamma;
  return MAVF_OK;
}

mavf_status mavf_scenario_set_runs(mavf_scenario* scenario, int runs) {
  if (!scenario) return fail(MAVF_ERR_CONFIG, "null scenario");
  if (runs < 1) return fail(MAVF_ERR_CONFIG, "runs: must be >= 1");
  scenario->value.runs = runs;
  return MAVF_OK;
}

mavf_status mavf_scenario_set_threads(mavf_scenario* scenario, int threads) {
  if (!scenario) return fail(MAVF_ERR_CONFIG, "null scenario");
  if (threads < 0) return fail(MAVF_ERR_CONFIG, "threads: must be >= 0");
  scenario->value.threads = threads;
  return MAVF_OK;
}

mavf_status mavf_scenario_gamma_grid(const mavf_scenario* scenario, double* out, size_t capacity, size_t* count) {
  if (!scenario || !count) return fail(MAVF_ERR_CONFIG, "null argument");
  const auto& grid = scenario->value.gamma_grid;
  *count = grid.size();
  for (size_t i = 0; i < grid.size() && i < capacity && out; ++i) out[i] = grid[i];
  return MAVF_OK;
}

mavf_status mavf_scenario_to_json(const mavf_scenario* scenario, char** out) {
  if (!scenario || !out) return fail(MAVF_ERR_CONFIG, "null argument");
  return guarded([&] {
    const std::string text = mavf::scenario_to_json(scenario->value);
    char* buf = new char[text.size() + 1];
    std::memcpy(buf, text.c_str(), text.size() + 1);
    *out = buf;
    return MAVF_OK;
  });
}

void mavf_string_free(char* text) { delete[] text; }

mavf_status mavf_simulate(const mavf_scenario* scenario, const char* out_dir, mavf_run_summary* summary) {
  if (!scenario) return fail(MAVF_ERR_CONFIG, "null scenario");
  return guarded([&] {
    const auto dir = output_dir(out_dir);
    const mavf::ScenarioResult res = mavf::run_scenario(scenario->value);
    write_csv(dir / "trace.csv", [](std::ostream& o, const auto& r) { mavf::write_trace_csv(o, r); }, res.runs);
    if (summary) {
      *summary = mavf_run_summary{};
      summary->runs = scenario->value.runs;
      summary->steps = scenario->value.steps;
      summary->nodes = static_cast<int>(scenario->value.nodes.size());
      if (scenario->value.steps > 0) {
        summary->mean_error_m = res.metrics.mean_error;
        summary->min_node_error_m = res.metrics.min_node_error;
        summary->max_node_error_m = res.metrics.max_node_error;
        summary->network_tx_rate = res.metrics.network_tx_rate;
      }
    }
    return MAVF_OK;
  });
}

mavf_status mavf_sweep(const mavf_scenario* scenario, const double* grid, size_t grid_size, const char* out_dir,
                       int write_traces) {
  if (!scenario) return fail(MAVF_ERR_CONFIG, "null scenario");
  if (grid_size > 0 && !grid) return fail(MAVF_ERR_CONFIG, "null gamma grid");
  return guarded([&] {
    const auto dir = output_dir(out_dir);
    std::vector<double> values = grid_size > 0 ? std::vector<double>(grid, grid + grid_size) : scenario->value.gamma_grid;
    std::vector<mavf::ScenarioResult> traces;
    const auto rows = mavf::sweep_gamma(scenario->value, values, write_traces ? &traces : nullptr);
    if (write_traces) {
      for (size_t i = 0; i < traces.size(); ++i) {
        write_csv(dir / ("trace_gamma_" + std::to_string(i) + ".csv"),
                  [](std::ostream& o, const auto& r) { mavf::write_trace_csv(o, r); }, traces[i].runs);
      }
    }
    write_csv(dir / "sweep.csv", [](std::ostream& o, const auto& r) { mavf::write_sweep_csv(o, r); }, rows);
    return MAVF_OK;
  });
}

mavf_status mavf_mission(const mavf_scenario* scenario, const char* out_dir, mavf_mission_summary* summary) {
  if (!scenario) return fail(MAVF_ERR_CONFIG, "null scenario");
  return guarded([&] {
    const auto dir = output_dir(out_dir);
    if (scenario->value.missions.empty()) throw mavf::ConfigError("missions", "the mission experiment needs one mission");
    if (scenario->value.steps == 0) throw mavf::ConfigError("steps", "the mission experiment needs at least one step");
    const auto& m = scenario->value.missions.front();
    const mavf::MissionReport report = mavf::mission_experiment(scenario->value, m.owner, m.requirement_m);
    write_csv(dir / "trace_aware.csv", [](std::ostream& o, const auto& r) { mavf::write_trace_csv(o, r); },
              report.aware.runs);
    write_csv(dir / "trace_agnostic.csv", [](std::ostream& o, const auto& r) { mavf::write_trace_csv(o, r); },
              report.agnostic.runs);
    if (summary) {
      auto mean = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x;
        return v.empty() ? 0.0 : s / static_cast<double>(v.size());
      };
      *summary = mavf_mission_summary{};
      summary->owner = report.owner;
      summary->requirement_m = report.requirement_m;
      summary->aware_final_error_m = mean(report.aware_final_error);
      summary->agnostic_final_error_m = mean(report.agnostic_final_error);
      summary->aware_satisfied_runs = report.aware_satisfied;
      summary->agnostic_satisfied_runs = report.agnostic_satisfied;
      summary->separated_runs = report.separated;
      summary->runs = static_cast<int>(report.aware_final_error.size());
      summary->aware_network_tx_rate = report.aware.metrics.network_tx_rate;
      summary->agnostic_network_tx_rate = report.agnostic.metrics.network_tx_rate;
      summary->min_phi = report.aware.metrics.min_phi;
    }
    return MAVF_OK;
  });
}

mavf_status mavf_flow(const mavf_scenario* scenario, const char* out_dir) {
  if (!scenario) return fail(MAVF_ERR_CONFIG, "null scenario");
  return guarded([&] {
    const auto dir = output_dir(out_dir);
    if (scenario->value.flow_placements.empty()) {
      throw mavf::ConfigError("flow_placements", "the flow analysis needs at least one placement");
    }
    if (scenario->value.steps == 0) throw mavf::ConfigError("steps", "the flow analysis needs at least one step");
    const auto report = mavf::flow_analysis(scenario->value, scenario->value.flow_placements);
    write_csv(dir / "flow.csv", [](std::ostream& o, const auto& r) { mavf::write_flow_csv(o, r); }, report.rows);
    return MAVF_OK;
  });
}

mavf_status mavf_validate(mavf_check_callback report, void* user) {
  return guarded([&] {
    bool all = true;
    for (const auto& check : mavf::run_validation()) {
      all = all && check.passed;
      if (report) report(check.name.c_str(), check.passed ? 1 : 0, check.detail.c_str(), user);
    }
    return all ? MAVF_OK : fail(MAVF_ERR_VALIDATION, "one or more oracle checks failed");
  });
}

mavf_status mavf_simulation_create(const mavf_scenario* scenario, uint64_t run, mavf_simulation** out) {
  if (!scenario || !out) return fail(MAVF_ERR_CONFIG, "null argument");
  return guarded([&] {
    auto handle = std::make_unique<mavf_simulation>();
    handle->sim = std::make_unique<mavf::Simulation>(scenario->value, scenario->value.seed + run);
    *out = handle.release();
    return MAVF_OK;
  });
}

void mavf_simulation_free(mavf_simulation* sim) { delete sim; }

mavf_status mavf_simulation_step(mavf_simulation* sim) {
  if (!sim) return fail(MAVF_ERR_CONFIG, "null simulation");
  return guarded([&] {
    sim->last = sim->sim->run_round();
    return MAVF_OK;
  });
}

int mavf_simulation_node_count(const mavf_simulation* sim) {
  return sim ? static_cast<int>(sim->sim->agents().size()) : 0;
}

int mavf_simulation_current_step(const mavf_simulation* sim) { return sim ? sim->sim->step() : 0; }

mavf_status mavf_simulation_node(const mavf_simulation* sim, int index, mavf_node_report* out) {
  if (!sim || !out) return fail(MAVF_ERR_CONFIG, "null argument");
  if (!sim->last) return fail(MAVF_ERR_CONFIG, "no step has been run yet");
  if (index < 0 || index >= static_cast<int>(sim->last->agents.size())) return fail(MAVF_ERR_CONFIG, "node index out of range");
  const auto& a = sim->last->agents[static_cast<size_t>(index)];
  *out = mavf_node_report{a.node, a.estimate.x(), a.estimate.y(), a.err_pos_m, a.voi, a.transmitted, a.phi_own, a.g_val};
  return MAVF_OK;
}

mavf_status mavf_simulation_truth(const mavf_simulation* sim, double out[4]) {
  if (!sim || !out) return fail(MAVF_ERR_CONFIG, "null argument");
  const auto& t = sim->sim->truth();
  for (int i = 0; i < 4; ++i) out[i] = t(i);
  return MAVF_OK;
}

}  // extern "C"
