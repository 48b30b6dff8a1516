#ifndef CPS_SENTINEL_H
#define CPS_SENTINEL_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum CpsStatus {
  CPS_STATUS_OK = 0,
  CPS_STATUS_NULL_POINTER = 1,
  CPS_STATUS_INVALID_UTF8 = 2,
  CPS_STATUS_PARSE_ERROR = 3,
  CPS_STATUS_VALIDATION_ERROR = 4,
  CPS_STATUS_NUMERIC_ERROR = 5,
  CPS_STATUS_OUT_OF_RANGE = 6,
  CPS_STATUS_UNDEFINED_RATIO = 7,
  CPS_STATUS_REFUSED = 8,
  CPS_STATUS_UNKNOWN_PRESET = 9,
  CPS_STATUS_PANIC = 10,
} CpsStatus;

/**
 * A validated scenario.
 */
typedef struct CpsScenario CpsScenario;

/**
 * Detection statistics of one simulated path.
 */
typedef struct CpsSeries CpsSeries;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copy of the last error message on this thread, or null if none.
 */
char *cps_last_error_message(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void cps_string_free(char *s);

/**
 * Library version as a static string.
 */
const char *cps_version(void);

/**
 * Parses and validates a JSON scenario.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum CpsStatus cps_scenario_from_json(const char *json, struct CpsScenario **out);

/**
 * JSON text of a built-in scenario, to be freed with [`cps_string_free`].
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` must be writable.
 */
enum CpsStatus cps_preset_json(const char *name, char **out);

/**
 * # Safety
 * `scenario` must come from this library and not be freed twice.
 */
void cps_scenario_free(struct CpsScenario *scenario);

/**
 * # Safety
 * Pointers must be valid.
 */
enum CpsStatus cps_scenario_n_agents(const struct CpsScenario *scenario, size_t *out);

/**
 * Whether every agent is reachable from an honest actuator.
 *
 * # Safety
 * Pointers must be valid.
 */
enum CpsStatus cps_scenario_influence_holds(const struct CpsScenario *scenario, bool *out);

/**
 * Predicted per-step drift of `log L_n`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum CpsStatus cps_expected_drift(const struct CpsScenario *scenario, uint64_t seed, double *out);

/**
 * Simulates one path with `seed` and scores it. A zero `horizon` keeps
 * the scenario's own.
 *
 * # Safety
 * Pointers must be valid.
 */
enum CpsStatus cps_detect(const struct CpsScenario *scenario,
                          uint64_t seed,
                          size_t horizon,
                          struct CpsSeries **out);

/**
 * # Safety
 * `series` must come from this library and not be freed twice.
 */
void cps_series_free(struct CpsSeries *series);

/**
 * Number of transitions in the series.
 *
 * # Safety
 * Pointers must be valid.
 */
enum CpsStatus cps_series_len(const struct CpsSeries *series, size_t *out);

/**
 * `log L_n` after `n` transitions.
 *
 * # Safety
 * Pointers must be valid.
 */
enum CpsStatus cps_series_log_l(const struct CpsSeries *series, size_t n, double *out);

/**
 * `r_n` after `n` transitions.
 *
 * # Safety
 * Pointers must be valid.
 */
enum CpsStatus cps_series_r_n(const struct CpsSeries *series, size_t n, double *out);

/**
 * DetectionSeries CSV text, to be freed with [`cps_string_free`].
 *
 * # Safety
 * Pointers must be valid.
 */
enum CpsStatus cps_series_csv(const struct CpsSeries *series, char **out);

/**
 * Runs the whole batch in memory and returns the summary JSON. `jobs = 0`
 * uses all cores, `1` runs serially.
 *
 * # Safety
 * Pointers must be valid.
 */
enum CpsStatus cps_montecarlo_summary(const struct CpsScenario *scenario,
                                      size_t jobs,
                                      bool override_assumption2,
                                      char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CPS_SENTINEL_H */
