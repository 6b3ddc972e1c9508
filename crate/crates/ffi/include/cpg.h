#ifndef CPG_H
#define CPG_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum CpgStatus {
  CPG_STATUS_OK = 0,
  CPG_STATUS_NULL_POINTER = 1,
  CPG_STATUS_INVALID_UTF8 = 2,
  CPG_STATUS_PARSE_ERROR = 3,
  CPG_STATUS_INVALID_CONFIG = 4,
  CPG_STATUS_IO_ERROR = 5,
  CPG_STATUS_OUT_OF_RANGE = 6,
  CPG_STATUS_RUN_FAILED = 7,
  CPG_STATUS_PANIC = 8,
} CpgStatus;

/**
 * A validated experiment configuration.
 */
typedef struct CpgConfig CpgConfig;

/**
 * The record of one training run.
 */
typedef struct CpgRunRecord CpgRunRecord;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the last failure on this thread, or an empty string.
 * The pointer stays valid until the next call into this library on the
 * same thread.
 */
const char *cpg_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *cpg_version(void);

/**
 * Parses and validates a TOML configuration.
 *
 * # Safety
 * `toml` must be a NUL-terminated string; `out` must be writable.
 */
enum CpgStatus cpg_config_from_toml(const char *toml, struct CpgConfig **out);

/**
 * Loads a shipped preset by name.
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` must be writable.
 */
enum CpgStatus cpg_config_preset(const char *name, struct CpgConfig **out);

/**
 * Overrides the iteration count and seed count, for quick runs.
 *
 * # Safety
 * `config` must come from this library and not have been freed.
 */
enum CpgStatus cpg_config_set_budget(struct CpgConfig *config, size_t iterations, size_t num_seeds);

/**
 * Number of sweep cells in the configuration.
 *
 * # Safety
 * `config` must be valid; `out` must be writable.
 */
enum CpgStatus cpg_config_num_cells(const struct CpgConfig *config, size_t *out);

/**
 * Releases a configuration. Passing null is a no-op.
 *
 * # Safety
 * `config` must come from this library and not have been freed.
 */
void cpg_config_free(struct CpgConfig *config);

/**
 * Trains sweep cell `cell` with the given run seed. A run that aborts on a
 * non-finite value still yields a record; check `cpg_record_completed`.
 *
 * # Safety
 * `config` must be valid; `out` must be writable.
 */
enum CpgStatus cpg_run(const struct CpgConfig *config,
                       size_t cell,
                       uint64_t seed,
                       struct CpgRunRecord **out);

/**
 * Runs the full experiment, writing records and the summary under
 * `output_dir`. `success` receives whether every run completed and every
 * check passed.
 *
 * # Safety
 * `config` must be valid, `output_dir` NUL-terminated, `success` writable.
 */
enum CpgStatus cpg_run_experiment(const struct CpgConfig *config,
                                  const char *output_dir,
                                  bool *success);

/**
 * Releases a run record. Passing null is a no-op.
 *
 * # Safety
 * `record` must come from this library and not have been freed.
 */
void cpg_record_free(struct CpgRunRecord *record);

/**
 * Whether the run finished all iterations.
 *
 * # Safety
 * `record` must be valid; `out` must be writable.
 */
enum CpgStatus cpg_record_completed(const struct CpgRunRecord *record, bool *out);

/**
 * Number of logged iterations and of constraints.
 *
 * # Safety
 * `record` must be valid; both out-pointers must be writable.
 */
enum CpgStatus cpg_record_shape(const struct CpgRunRecord *record,
                                size_t *iterations,
                                size_t *constraints);

/**
 * Estimated return, constraint costs and multipliers at one iteration.
 * `costs` and `lambda` must each hold as many values as there are
 * constraints.
 *
 * # Safety
 * `record` must be valid; the out-pointers must be writable for the sizes
 * described above.
 */
enum CpgStatus cpg_record_iteration(const struct CpgRunRecord *record,
                                    size_t iteration,
                                    double *ret,
                                    double *costs,
                                    double *lambda);

/**
 * Copies the final parameters into `buffer` (capacity `len`) and stores the
 * parameter count in `needed`. When `len` is too small nothing is copied
 * and `OutOfRange` is returned.
 *
 * # Safety
 * `record` must be valid, `buffer` writable for `len` values (or null when
 * `len` is 0), `needed` writable.
 */
enum CpgStatus cpg_record_final_params(const struct CpgRunRecord *record,
                                       double *buffer,
                                       size_t len,
                                       size_t *needed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CPG_H */
