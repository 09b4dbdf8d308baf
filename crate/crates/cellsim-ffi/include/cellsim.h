#ifndef CELLSIM_H
#define CELLSIM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible entry point.
 */
typedef enum {
  SIM_STATUS_OK = 0,
  SIM_STATUS_NULL_ARGUMENT = 1,
  SIM_STATUS_CONFIG_ERROR = 2,
  SIM_STATUS_IO_ERROR = 3,
  SIM_STATUS_INVALID_ARGUMENT = 4,
  SIM_STATUS_RUNTIME_ERROR = 5,
} SimStatus;

/**
 * Opaque experiment configuration handle.
 */
typedef struct SimConfig SimConfig;

/**
 * Opaque result handle: the aggregated table plus C-string storage for row
 * accessors.
 */
typedef struct SimResult SimResult;

/**
 * One row of a result table, exposed over the C ABI. String pointers are
 * owned by the result handle.
 */
typedef struct {
  const char *sweep_var;
  double sweep_value;
  const char *metric;
  double mean;
  /**
   * Standard error of the mean (named to avoid the C `stderr` macro).
   */
  double std_error;
  uint64_t n;
} SimResultRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Last error message of the current thread (empty string when none).
 * The pointer stays valid until the next failing call on this thread.
 */
const char *sim_last_error_message(void);

/**
 * Library version as a static string.
 */
const char *sim_version(void);

/**
 * Creates a config with the built-in defaults of the named experiment
 * (`mu-gain`, `das`, `femto`, `cfo`, `pilot-power`).
 *
 * # Safety
 * `experiment` must be a valid NUL-terminated string and `out` a valid
 * pointer; on success `*out` owns the handle and must be released with
 * [`sim_config_free`].
 */
SimStatus sim_config_default(const char *experiment, SimConfig **out);

/**
 * Parses a full TOML config (strict: unknown keys are rejected).
 *
 * # Safety
 * `text` must be a valid NUL-terminated string and `out` a valid pointer;
 * on success `*out` must be released with [`sim_config_free`].
 */
SimStatus sim_config_parse(const char *text, SimConfig **out);

/**
 * Records a dotted-path override, e.g. key `propagation.noise_dbm`,
 * value `-100`. Overrides are validated when the simulation runs.
 *
 * # Safety
 * All pointers must be valid; `config` must come from this library.
 */
SimStatus sim_config_override(SimConfig *config, const char *key, const char *value);

/**
 * Overrides the Monte-Carlo seed.
 *
 * # Safety
 * `config` must be a valid handle from this library.
 */
SimStatus sim_config_set_seed(SimConfig *config, uint64_t seed);

/**
 * Overrides the number of Monte-Carlo drops.
 *
 * # Safety
 * `config` must be a valid handle from this library.
 */
SimStatus sim_config_set_drops(SimConfig *config, size_t drops);

/**
 * Runs the configured experiment. `n_threads` caps the worker count
 * (0 uses the default); results do not depend on it.
 *
 * # Safety
 * `config` must be a valid handle and `out` a valid pointer; on success
 * `*out` must be released with [`sim_result_free`].
 */
SimStatus sim_run(const SimConfig *config, size_t n_threads, SimResult **out);

/**
 * Number of rows in the result table.
 *
 * # Safety
 * `result` must be a valid handle (null returns 0).
 */
size_t sim_result_row_count(const SimResult *result);

/**
 * Copies row `index` into `out`. String pointers stay owned by the handle.
 *
 * # Safety
 * `result` and `out` must be valid pointers.
 */
SimStatus sim_result_row(const SimResult *result, size_t index, SimResultRow *out);

/**
 * Whole table as CSV text, owned by the handle.
 *
 * # Safety
 * `result` must be a valid handle.
 */
const char *sim_result_csv(const SimResult *result);

/**
 * Writes the CSV and the gnuplot script into `out_dir` (created if needed).
 *
 * # Safety
 * Pointers must be valid.
 */
SimStatus sim_result_write(const SimResult *result, const char *out_dir);

/**
 * Releases a config handle (null is a no-op).
 *
 * # Safety
 * `config` must come from this library and not be freed twice.
 */
void sim_config_free(SimConfig *config);

/**
 * Releases a result handle (null is a no-op).
 *
 * # Safety
 * `result` must come from this library and not be freed twice.
 */
void sim_result_free(SimResult *result);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CELLSIM_H */
