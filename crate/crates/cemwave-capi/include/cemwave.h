#ifndef CEMWAVE_H
#define CEMWAVE_H

/* Generated from the cemwave-capi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Outcome of a fallible call. Anything but `Ok` leaves a message readable
// via `cw_last_error`.
typedef enum CwStatus {
  CW_STATUS_OK = 0,
  // A required pointer argument was null.
  CW_STATUS_NULL_ARGUMENT = 1,
  // Arguments were readable but invalid (bad config, unknown sweep, row
  // out of range, non-UTF-8 text).
  CW_STATUS_INVALID_ARGUMENT = 2,
  // The solver failed while running.
  CW_STATUS_RUNTIME_ERROR = 3,
  // A panic was caught at the boundary; the handle states are still
  // valid but the call did nothing.
  CW_STATUS_PANIC = 4,
} CwStatus;

// Parsed experiment configuration.
typedef struct CwConfig CwConfig;

// A completed run: one row per experiment (built-in sweeps hold several).
typedef struct CwRun CwRun;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *cw_version(void);

// Copy the current thread's last error message into `buf` (truncating to
// `cap - 1` bytes plus a NUL) and return the full message length. Call
// with a null `buf` to query the length alone.
//
// # Safety
// `buf` must be null or point to at least `cap` writable bytes.
size_t cw_last_error(char *buf, size_t cap);

// Parse a TOML experiment config. On success `*out` owns the config;
// release it with `cw_config_free`.
//
// # Safety
// `text` must be a NUL-terminated string; `out` must be a valid pointer.
enum CwStatus cw_config_parse(const char *text, struct CwConfig **out);

// Release a config handle. Null is a no-op.
//
// # Safety
// `cfg` must be null or a pointer returned by `cw_config_parse` that has
// not been freed yet.
void cw_config_free(struct CwConfig *cfg);

// Run one experiment. `id` names the run in output files; `out_dir` is
// optional (null = no files written). On success `*out` owns the result;
// release it with `cw_run_free`.
//
// # Safety
// `cfg` must be a live config handle; `id` a NUL-terminated string;
// `out_dir` null or NUL-terminated; `out` a valid pointer.
enum CwStatus cw_run_experiment(const struct CwConfig *cfg,
                                const char *id,
                                const char *out_dir,
                                struct CwRun **out);

// Run a built-in sweep (`table1` | `table2` | `table4` | `table5` |
// `table6` | `table7`). A negative `seed` keeps the sweep's default
// layout seed. On success `*out` owns one row per sweep cell.
//
// # Safety
// `table` must be a NUL-terminated string; `out_dir` null or
// NUL-terminated; `out` a valid pointer.
enum CwStatus cw_run_table(const char *table,
                           const char *out_dir,
                           int64_t seed,
                           struct CwRun **out);

// Release a run handle. Null is a no-op.
//
// # Safety
// `run` must be null or a pointer returned by a run call that has not
// been freed yet.
void cw_run_free(struct CwRun *run);

// Number of result rows in a run handle (0 for null).
//
// # Safety
// `run` must be null or a live run handle.
size_t cw_run_rows(const struct CwRun *run);

// Relative errors of one row. Output pointers may be null to skip fields.
//
// # Safety
// `run` must be a live run handle; each non-null output must be writable.
enum CwStatus cw_run_errors(const struct CwRun *run,
                            size_t row,
                            double *err_l2,
                            double *err_h1,
                            double *err_a);

// Convergence orders of one row against the previous sweep row; NaN where
// undefined (first row, or error did not decrease).
//
// # Safety
// `run` must be a live run handle; each non-null output must be writable.
enum CwStatus cw_run_orders(const struct CwRun *run,
                            size_t row,
                            double *order_l2,
                            double *order_h1);

// Resolved discretization parameters of one row.
//
// # Safety
// `run` must be a live run handle; each non-null output must be writable.
enum CwStatus cw_run_params(const struct CwRun *run,
                            size_t row,
                            double *eps,
                            double *h_coarse,
                            double *h_fine,
                            double *dt);

// Wall-clock seconds spent on one row.
//
// # Safety
// `run` must be a live run handle; `seconds` must be null or writable.
enum CwStatus cw_run_wall_seconds(const struct CwRun *run, size_t row, double *seconds);

// Copy one row's experiment id into `buf` (truncating to `cap - 1` bytes
// plus a NUL) and return the full id length; 0 when the row is invalid.
//
// # Safety
// `run` must be a live run handle; `buf` null or `cap` writable bytes.
size_t cw_run_id(const struct CwRun *run, size_t row, char *buf, size_t cap);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CEMWAVE_H */
