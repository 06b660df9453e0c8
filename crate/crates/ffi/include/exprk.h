#ifndef EXPRK_H
#define EXPRK_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ExprkStatus {
  EXPRK_STATUS_OK = 0,
  EXPRK_STATUS_NULL_POINTER = 1,
  EXPRK_STATUS_INVALID_ARGUMENT = 2,
  EXPRK_STATUS_UNKNOWN_SCHEME = 3,
  EXPRK_STATUS_UNKNOWN_PROBLEM = 4,
  EXPRK_STATUS_DIVERGENCE = 5,
  EXPRK_STATUS_NUMERICAL = 6,
  EXPRK_STATUS_BUFFER_TOO_SMALL = 7,
  EXPRK_STATUS_PANIC = 8,
} ExprkStatus;

/**
 * Opaque problem handle.
 */
typedef struct ExprkProblem ExprkProblem;

/**
 * Opaque scheme handle.
 */
typedef struct ExprkScheme ExprkScheme;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Creates a scheme by name: `exprk6s15`, `exprk6s16`, `expeuler` or `expk2`.
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a valid pointer.
 */
enum ExprkStatus exprk_scheme_new(const char *name, struct ExprkScheme **out);

/**
 * # Safety
 * `scheme` must come from [`exprk_scheme_new`] and not be used afterwards.
 */
void exprk_scheme_free(struct ExprkScheme *scheme);

/**
 * Number of stages, or 0 for a null handle.
 *
 * # Safety
 * `scheme` must be null or a live handle.
 */
size_t exprk_scheme_stages(const struct ExprkScheme *scheme);

/**
 * Audits the order conditions up to `order` with a random model of
 * dimension 4. Residuals are written in condition order; `count` receives
 * the number of conditions even when `capacity` is too small.
 *
 * # Safety
 * `residuals` must hold `capacity` doubles; `count` and `all_pass` must be
 * valid pointers.
 */
enum ExprkStatus exprk_scheme_check(const struct ExprkScheme *scheme,
                                    uint32_t order,
                                    bool weak17,
                                    uint64_t seed,
                                    double *residuals,
                                    size_t capacity,
                                    size_t *count,
                                    bool *all_pass);

/**
 * Creates a benchmark problem by name (`heat1d`, `linear-decay`) on `n`
 * interior grid points.
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a valid pointer.
 */
enum ExprkStatus exprk_problem_new(const char *name, size_t n, struct ExprkProblem **out);

/**
 * # Safety
 * `problem` must come from [`exprk_problem_new`] and not be used afterwards.
 */
void exprk_problem_free(struct ExprkProblem *problem);

/**
 * State dimension, or 0 for a null handle.
 *
 * # Safety
 * `problem` must be null or a live handle.
 */
size_t exprk_problem_dim(const struct ExprkProblem *problem);

/**
 * Integrates from the problem's initial data to `t_end` with constant step
 * `h` and writes the final state.
 *
 * # Safety
 * Handles must be live; `state` must hold `len` doubles.
 */
enum ExprkStatus exprk_integrate(const struct ExprkScheme *scheme,
                                 const struct ExprkProblem *problem,
                                 double t_end,
                                 double h,
                                 bool concurrent,
                                 double *state,
                                 size_t len);

/**
 * Discrete L2 distance between `state` and the exact solution at `t`.
 *
 * # Safety
 * `problem` must be live, `state` must hold `len` doubles, `error` must be
 * valid.
 */
enum ExprkStatus exprk_error_at(const struct ExprkProblem *problem,
                                const double *state,
                                size_t len,
                                double t,
                                double *error);

/**
 * `φ_0(A), …, φ_kmax(A)` for an `n x n` matrix, written consecutively to
 * `out`, which must hold `(kmax + 1) n^2` doubles.
 *
 * # Safety
 * `a` must hold `n * n` doubles and `out` `(kmax + 1) * n * n`.
 */
enum ExprkStatus exprk_phi(const double *a, size_t n, size_t kmax, double *out);

/**
 * Copies the last error message of this thread into `buf` (truncated,
 * always NUL-terminated when `capacity > 0`) and returns the full length
 * including the terminator.
 *
 * # Safety
 * `buf` must be null or hold `capacity` bytes.
 */
size_t exprk_last_error(char *buf, size_t capacity);

/**
 * Static description of a status code.
 */
const char *exprk_status_string(enum ExprkStatus status);

/**
 * Library version as a static string.
 */
const char *exprk_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EXPRK_H */
