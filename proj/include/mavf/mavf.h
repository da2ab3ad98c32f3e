/* C interface to the mission-aware censored distributed filter library.
 *
 * Objects are opaque handles released with the matching *_free function.
 * Every call returns a mavf_status; on failure mavf_last_error() describes
 * the problem (thread-local, valid until the next failing call on the same
 * thread). */
#ifndef MAVF_MAVF_H_
#define MAVF_MAVF_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(MAVF_BUILDING_LIBRARY)
#    define MAVF_API __declspec(dllexport)
#  else
#    define MAVF_API __declspec(dllimport)
#  endif
#else
#  define MAVF_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mavf_status {
  MAVF_OK = 0,
  MAVF_ERR_CONFIG = 1,     /* invalid scenario or argument */
  MAVF_ERR_VALIDATION = 2, /* an oracle cross-check failed */
  MAVF_ERR_IO = 3,
  MAVF_ERR_NUMERIC = 4,    /* singular or non-PD system during a run */
  MAVF_ERR_INTERNAL = 5
} mavf_status;

typedef struct mavf_scenario mavf_scenario;
typedef struct mavf_simulation mavf_simulation;

MAVF_API const char* mavf_version(void);
MAVF_API const char* mavf_last_error(void);

/* Scenarios */
MAVF_API mavf_status mavf_scenario_default(mavf_scenario** out);
MAVF_API mavf_status mavf_scenario_load(const char* path, mavf_scenario** out);
MAVF_API mavf_status mavf_scenario_parse(const char* json_text, mavf_scenario** out);
MAVF_API void mavf_scenario_free(mavf_scenario* scenario);
MAVF_API mavf_status mavf_scenario_set_seed(mavf_scenario* scenario, uint64_t seed);
MAVF_API mavf_status mavf_scenario_set_gamma(mavf_scenario* scenario, double gamma);
MAVF_API mavf_status mavf_scenario_set_runs(mavf_scenario* scenario, int runs);
MAVF_API mavf_status mavf_scenario_set_threads(mavf_scenario* scenario, int threads);
/* Copies up to `capacity` grid values into `out`; *count receives the grid size. */
MAVF_API mavf_status mavf_scenario_gamma_grid(const mavf_scenario* scenario, double* out, size_t capacity,
                                              size_t* count);
/* JSON serialization; *out must be released with mavf_string_free. */
MAVF_API mavf_status mavf_scenario_to_json(const mavf_scenario* scenario, char** out);
MAVF_API void mavf_string_free(char* text);

/* Experiments. Output files are written into `out_dir`, which must exist. */
typedef struct mavf_run_summary {
  double mean_error_m;
  double min_node_error_m;
  double max_node_error_m;
  double network_tx_rate;
  int runs;
  int steps;
  int nodes;
} mavf_run_summary;

/* Writes trace.csv. */
MAVF_API mavf_status mavf_simulate(const mavf_scenario* scenario, const char* out_dir, mavf_run_summary* summary);

/* Writes sweep.csv and, when write_traces != 0, trace_gamma_<i>.csv per grid entry. */
MAVF_API mavf_status mavf_sweep(const mavf_scenario* scenario, const double* grid, size_t grid_size,
                                const char* out_dir, int write_traces);

typedef struct mavf_mission_summary {
  int owner;
  double requirement_m;
  double aware_final_error_m;     /* owner running-average error at the last step, mean over runs */
  double agnostic_final_error_m;
  int aware_satisfied_runs;
  int agnostic_satisfied_runs;
  int separated_runs;             /* aware satisfies and agnostic violates */
  int runs;
  double aware_network_tx_rate;
  double agnostic_network_tx_rate;
  double min_phi;
} mavf_mission_summary;

/* Uses the scenario's first mission; writes trace_aware.csv and trace_agnostic.csv. */
MAVF_API mavf_status mavf_mission(const mavf_scenario* scenario, const char* out_dir, mavf_mission_summary* summary);

/* Uses the scenario's flow placements; writes flow.csv. */
MAVF_API mavf_status mavf_flow(const mavf_scenario* scenario, const char* out_dir);

/* Oracle cross-checks. `report` is called once per check (may be NULL).
 * Returns MAVF_ERR_VALIDATION when any check fails. */
typedef void (*mavf_check_callback)(const char* name, int passed, const char* detail, void* user);
MAVF_API mavf_status mavf_validate(mavf_check_callback report, void* user);

/* Step-by-step simulation of one Monte Carlo run (seed = scenario seed + run). */
MAVF_API mavf_status mavf_simulation_create(const mavf_scenario* scenario, uint64_t run, mavf_simulation** out);
MAVF_API void mavf_simulation_free(mavf_simulation* sim);
MAVF_API mavf_status mavf_simulation_step(mavf_simulation* sim);
MAVF_API int mavf_simulation_node_count(const mavf_simulation* sim);
MAVF_API int mavf_simulation_current_step(const mavf_simulation* sim);

typedef struct mavf_node_report {
  int node;
  double est_x;
  double est_y;
  double err_pos_m;
  double voi;
  int transmitted;
  double phi_own;
  double g_val;
} mavf_node_report;

/* Record of node `index` (ascending id order) from the last step. */
MAVF_API mavf_status mavf_simulation_node(const mavf_simulation* sim, int index, mavf_node_report* out);
/* Ground-truth target state [x, vx, y, vy]. */
MAVF_API mavf_status mavf_simulation_truth(const mavf_simulation* sim, double out[4]);

#ifdef __cplusplus
}
#endif

#endif /* MAVF_MAVF_H_ */
