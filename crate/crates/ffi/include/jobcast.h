/* C API for the jobcast toolkit. */

#ifndef JOBCAST_H
#define JOBCAST_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of a fallible call. Mirrors the CLI exit codes.
 */
typedef enum JcStatus {
  JcOk = 0,
  JcUsageError = 1,
  JcDataError = 2,
} JcStatus;

/**
 * Opaque trained-model handle.
 */
typedef struct JcStore JcStore;

/**
 * Advisory for one submission.
 */
typedef struct JcAdvisory {
  double estimated_cpu_s;
  double estimated_mem_bytes;
  double failure_probability;
  /**
   * Requested resources fall below the estimated need.
   */
  bool under_provisioned;
  /**
   * No history for this user; role-level fallback aggregates were used.
   */
  bool cold_start;
} JcAdvisory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the most recent error on this thread.
 *
 * The pointer stays valid until the next failing jobcast call on the same
 * thread. Never null; the buffer is empty when no error has occurred.
 */
const char *jc_last_error(void);

/**
 * Generate a synthetic workload into `out_dir` (accounting.log, roles.csv).
 *
 * # Safety
 * `out_dir` must be a valid NUL-terminated string.
 */
enum JcStatus jc_synth(uint64_t seed,
                       uintptr_t n_users,
                       uintptr_t jobs_per_user,
                       const char *out_dir);

/**
 * Run the full ablation experiment and write the report.
 *
 * `format` is `"text"` or `"csv"`. When `fixed_timing` is true, fit times
 * are recorded as 0.0 so the report bytes are reproducible.
 *
 * # Safety
 * All pointer arguments must be valid NUL-terminated strings.
 */
enum JcStatus jc_evaluate(const char *accounting_path,
                          const char *roles_path,
                          const char *report_path,
                          const char *format,
                          uint64_t seed,
                          bool fixed_timing);

/**
 * Train the advisory model store from an accounting log and roles file.
 *
 * # Safety
 * All pointer arguments must be valid NUL-terminated strings.
 */
enum JcStatus jc_train(const char *accounting_path,
                       const char *roles_path,
                       const char *store_dir,
                       uint64_t seed);

/**
 * Load a model store. Returns null on failure (see [`jc_last_error`]).
 *
 * # Safety
 * `store_dir` must be a valid NUL-terminated string.
 */
struct JcStore *jc_store_open(const char *store_dir);

/**
 * Release a store handle. Null is a no-op.
 *
 * # Safety
 * `store` must be a pointer returned by [`jc_store_open`] that has not
 * been freed yet.
 */
void jc_store_free(struct JcStore *store);

/**
 * Score one submission; writes the advisory into `out`.
 *
 * # Safety
 * `store` must be a live handle from [`jc_store_open`]; `user` and
 * `project` must be valid NUL-terminated strings; `out` must point to a
 * writable [`JcAdvisory`].
 */
enum JcStatus jc_store_advise(const struct JcStore *store,
                              const char *user,
                              uint64_t req_time_s,
                              uint64_t req_mem_bytes,
                              const char *project,
                              struct JcAdvisory *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* JOBCAST_H */
