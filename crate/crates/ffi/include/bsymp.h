#ifndef BSYMP_H
#define BSYMP_H

/* Generated by cbindgen from crates/ffi/src; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum BsympStatus {
  BSYMP_STATUS_OK = 0,
  BSYMP_STATUS_NULL_POINTER = 1,
  BSYMP_STATUS_INVALID_UTF8 = 2,
  BSYMP_STATUS_PARSE_ERROR = 3,
  BSYMP_STATUS_IO = 4,
  /**
   * Degenerate form, non-transverse locus, failed volume or symplectic check.
   */
  BSYMP_STATUS_DEGENERATE = 5,
  /**
   * Bad dimensions, points outside a chart, violated preconditions.
   */
  BSYMP_STATUS_DOMAIN_ERROR = 6,
  /**
   * A construction could not be completed (seam mismatch, inflation, profile).
   */
  BSYMP_STATUS_TASK_FAILED = 7,
  BSYMP_STATUS_PANIC = 8,
} BsympStatus;

/**
 * A scalar expression in named variables.
 */
typedef struct BsympExpr BsympExpr;

/**
 * The result of running or verifying a scenario.
 */
typedef struct BsympReport BsympReport;

/**
 * A parsed scenario.
 */
typedef struct BsympScenario BsympScenario;

/**
 * Overrides for a run. Zero (or non-positive) fields keep the scenario value.
 */
typedef struct BsympRunOptions {
  size_t grid;
  double tol;
  bool has_seed;
  uint64_t seed;
  double profile_c;
  double period;
} BsympRunOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. Valid until the
 * next call into the library from this thread.
 */
const char *bsymp_last_error(void);

/**
 * Static, NUL-terminated version string.
 */
const char *bsymp_version(void);

/**
 * # Safety
 * `s` must come from this library (or be NULL).
 */
void bsymp_string_free(char *s);

/**
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum BsympStatus bsymp_scenario_load(const char *path, struct BsympScenario **out);

/**
 * # Safety
 * `text` must be a NUL-terminated string; `out` must be writable.
 */
enum BsympStatus bsymp_scenario_parse(const char *text, struct BsympScenario **out);

/**
 * # Safety
 * `s` must come from `bsymp_scenario_*` (or be NULL) and not be used afterwards.
 */
void bsymp_scenario_free(struct BsympScenario *s);

/**
 * # Safety
 * Pointers must be valid or NULL where noted.
 */
enum BsympStatus bsymp_scenario_task_count(const struct BsympScenario *s, size_t *out);

/**
 * Runs every task. A report whose tasks fail is still `Ok`; query it with
 * [`bsymp_report_passed`]. `opts` may be NULL.
 *
 * # Safety
 * `s` must be a live scenario; `out` must be writable.
 */
enum BsympStatus bsymp_run(const struct BsympScenario *s,
                           const struct BsympRunOptions *opts,
                           struct BsympReport **out);

/**
 * Default checks on every declared field.
 *
 * # Safety
 * As for [`bsymp_run`].
 */
enum BsympStatus bsymp_verify_fields(const struct BsympScenario *s,
                                     const struct BsympRunOptions *opts,
                                     struct BsympReport **out);

/**
 * # Safety
 * `r` must come from this library (or be NULL) and not be used afterwards.
 */
void bsymp_report_free(struct BsympReport *r);

/**
 * # Safety
 * Pointers must be valid.
 */
enum BsympStatus bsymp_report_passed(const struct BsympReport *r, bool *out);

/**
 * # Safety
 * Pointers must be valid.
 */
enum BsympStatus bsymp_report_task_count(const struct BsympReport *r, size_t *out);

/**
 * Value of residual `name` of task `task`.
 *
 * # Safety
 * Pointers must be valid; strings NUL-terminated.
 */
enum BsympStatus bsymp_report_residual(const struct BsympReport *r,
                                       const char *task,
                                       const char *name,
                                       double *out);

/**
 * The report as pretty JSON; free with [`bsymp_string_free`].
 *
 * # Safety
 * Pointers must be valid.
 */
enum BsympStatus bsymp_report_to_json(const struct BsympReport *r, char **out);

/**
 * Parses the prefix expression `text` (e.g. `"(+ (* x x) (sin y))"`) in the comma-separated variables `vars` (e.g. `"x,y"`).
 *
 * # Safety
 * Strings must be NUL-terminated; `out` must be writable.
 */
enum BsympStatus bsymp_expr_parse(const char *text,
                                  const char *vars,
                                  struct BsympExpr **out);

/**
 * # Safety
 * `x` must point to `n` doubles; `out` must be writable.
 */
enum BsympStatus bsymp_expr_eval(const struct BsympExpr *e, const double *x, size_t n, double *out);

/**
 * Partial derivative in variable `var`, as a new handle.
 *
 * # Safety
 * `e` must be live; `out` must be writable.
 */
enum BsympStatus bsymp_expr_diff(const struct BsympExpr *e, size_t var, struct BsympExpr **out);

/**
 * # Safety
 * `e` must come from this library (or be NULL) and not be used afterwards.
 */
void bsymp_expr_free(struct BsympExpr *e);

/**
 * Applies the model Dehn twist on `T*S^(n-1) ⊂ ℝⁿ × ℝⁿ` with support radius
 * `profile_c` (or its inverse) to `x = (u, v)`, writing `2n` doubles to `y`.
 *
 * # Safety
 * `x` and `y` must each hold `2n` doubles.
 */
enum BsympStatus bsymp_dehn_twist_apply(size_t n,
                                        double profile_c,
                                        bool inverse,
                                        const double *x,
                                        double *y);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BSYMP_H */
