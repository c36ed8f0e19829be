#ifndef KDV_FFI_H
#define KDV_FFI_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Advection coefficient families accepted by [`kdv_solver_new`].
 */
typedef enum KdvAdvection {
  /**
   * `params[0]` is the constant.
   */
  KDV_ADVECTION_CONSTANT = 0,
  /**
   * `params` are ascending polynomial coefficients.
   */
  KDV_ADVECTION_POLYNOMIAL = 1,
  /**
   * Three Gaussian bumps minus 1/2; no parameters.
   */
  KDV_ADVECTION_GAUSS3 = 2,
} KdvAdvection;

typedef enum KdvStatus {
  KDV_STATUS_OK = 0,
  KDV_STATUS_NULL_POINTER = 1,
  KDV_STATUS_INVALID_ARGUMENT = 2,
  KDV_STATUS_CONFIG_ERROR = 3,
  KDV_STATUS_NUMERICAL_ERROR = 4,
  KDV_STATUS_IO_ERROR = 5,
  KDV_STATUS_SUPPORT_VIOLATION = 6,
  KDV_STATUS_NOT_INITIALIZED = 7,
  KDV_STATUS_FINISHED = 8,
  KDV_STATUS_PANIC = 9,
} KdvStatus;

/**
 * Opaque solver handle.
 */
typedef struct KdvSolver KdvSolver;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Creates a solver on `(a, b)` with `n` modes and `m` steps up to `t_final`.
 *
 * # Safety
 * `params` must point to `n_params` doubles (or be null when `n_params` is
 * 0); `out` must be a valid pointer to a handle slot.
 */
enum KdvStatus kdv_solver_new(double a,
                              double b,
                              size_t n,
                              size_t m,
                              double t_final,
                              enum KdvAdvection advection,
                              const double *params,
                              size_t n_params,
                              struct KdvSolver **out);

/**
 * Creates a solver from a configuration file and projects its initial
 * value, so the handle is ready to step.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` a valid handle slot.
 */
enum KdvStatus kdv_solver_from_config(const char *path, struct KdvSolver **out);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `solver` must come from this library and not be used afterwards.
 */
void kdv_solver_free(struct KdvSolver *solver);

/**
 * Projects `exp(-((x - center) / width)^2)` and resets the step counter.
 *
 * # Safety
 * `solver` must be a live handle.
 */
enum KdvStatus kdv_solver_initialize_gaussian(struct KdvSolver *solver,
                                              double center,
                                              double width);

/**
 * Advances up to `steps` steps. Returns `Finished` if the final step was
 * already reached before the call.
 *
 * # Safety
 * `solver` must be a live handle.
 */
enum KdvStatus kdv_solver_advance(struct KdvSolver *solver, size_t steps);

/**
 * Current step index and time.
 *
 * # Safety
 * `solver` must be a live handle; outputs may be null.
 */
enum KdvStatus kdv_solver_position(struct KdvSolver *solver, size_t *step, double *time);

/**
 * Evaluates the `order`-th x-derivative (0..=3) of the current solution at
 * `n_points` points inside `[a, b]`.
 *
 * # Safety
 * `points` and `values` must each hold `n_points` doubles.
 */
enum KdvStatus kdv_solver_evaluate(struct KdvSolver *solver,
                                   const double *points,
                                   size_t n_points,
                                   uint32_t order,
                                   double *values);

/**
 * Boundary traces `u(a)`, `u_x(a)`, `u(b)` at the current step.
 *
 * # Safety
 * `solver` must be a live handle; `traces` must hold 3 doubles.
 */
enum KdvStatus kdv_solver_traces(struct KdvSolver *solver, double *traces);

/**
 * `tau * max |(g*)'| / 4` over the interval; values below 1 satisfy the
 * stability guard.
 *
 * # Safety
 * `solver` must be a live handle; `ratio` a valid pointer.
 */
enum KdvStatus kdv_solver_stability_ratio(struct KdvSolver *solver, double *ratio);

/**
 * Copies the calling thread's last error message into `buf` (NUL
 * terminated, truncated to `len`). Returns the full message length without
 * the terminator; pass a null buffer to query it.
 *
 * # Safety
 * `buf` must hold `len` bytes or be null.
 */
size_t kdv_last_error_message(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *kdv_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KDV_FFI_H */
