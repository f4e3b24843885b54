#ifndef FAIRALLOC_H
#define FAIRALLOC_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible call.
 */
typedef enum FaStatus {
  FA_STATUS_OK = 0,
  FA_STATUS_NULL_POINTER = 1,
  FA_STATUS_INVALID_UTF8 = 2,
  FA_STATUS_INVALID_PROBLEM = 3,
  FA_STATUS_INVALID_CONFIG = 4,
  FA_STATUS_SOLVER_FAILURE = 5,
  FA_STATUS_NOT_FOUND = 6,
  FA_STATUS_IO = 7,
  FA_STATUS_PANIC = 8,
} FaStatus;

/**
 * A validated problem.
 */
typedef struct FaProblem FaProblem;

/**
 * The outcome of one allocator run.
 */
typedef struct FaReport FaReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parses and validates a problem from JSON.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum FaStatus fa_problem_from_json(const char *json, struct FaProblem **out);

/**
 * Loads and validates a problem file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum FaStatus fa_problem_load(const char *path, struct FaProblem **out);

/**
 * # Safety
 * `problem` must come from this library and not be freed twice. Null is
 * ignored.
 */
void fa_problem_free(struct FaProblem *problem);

/**
 * Number of demands, 0 for a null handle.
 *
 * # Safety
 * `problem` must be null or a live handle.
 */
uintptr_t fa_problem_num_demands(const struct FaProblem *problem);

/**
 * Runs the allocator described by `config_json`, e.g.
 * `{"allocator":"gb","alpha":2}`.
 *
 * # Safety
 * `problem` must be a live handle, `config_json` a NUL-terminated string and
 * `out` a valid pointer.
 */
enum FaStatus fa_solve(const struct FaProblem *problem,
                       const char *config_json,
                       struct FaReport **out);

/**
 * # Safety
 * `report` must come from this library and not be freed twice. Null is
 * ignored.
 */
void fa_report_free(struct FaReport *report);

/**
 * Total allocation `f_k` of a demand.
 *
 * # Safety
 * `report` must be a live handle, `demand` a NUL-terminated string and `out`
 * a valid pointer.
 */
enum FaStatus fa_report_total(const struct FaReport *report, const char *demand, double *out);

/**
 * Rate of one demand on one path.
 *
 * # Safety
 * `report` must be a live handle, `demand` and `path` NUL-terminated
 * strings and `out` a valid pointer.
 */
enum FaStatus fa_report_rate(const struct FaReport *report,
                             const char *demand,
                             const char *path,
                             double *out);

/**
 * LP solves the run used, 0 for a null handle.
 *
 * # Safety
 * `report` must be null or a live handle.
 */
uintptr_t fa_report_lp_solves(const struct FaReport *report);

/**
 * Iterations the run used, 0 for a null handle.
 *
 * # Safety
 * `report` must be null or a live handle.
 */
uintptr_t fa_report_iterations(const struct FaReport *report);

/**
 * The full report as JSON, or null on failure. Free with
 * [`fa_string_free`].
 *
 * # Safety
 * `report` must be null or a live handle.
 */
char *fa_report_to_json(const struct FaReport *report);

/**
 * # Safety
 * `s` must come from this library and not be freed twice. Null is ignored.
 */
void fa_string_free(char *s);

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next call into the library on this thread.
 */
const char *fa_last_error(void);

/**
 * Library version as a static string.
 */
const char *fa_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FAIRALLOC_H */
