/* Generated by cbindgen. Do not edit. */

#ifndef DUHEM_H
#define DUHEM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DuhemMethod {
  DUHEM_METHOD_RK45_ADAPTIVE = 0,
  DUHEM_METHOD_RK4_FIXED = 1,
} DuhemMethod;

typedef enum DuhemStatus {
  DUHEM_STATUS_OK = 0,
  DUHEM_STATUS_NULL_POINTER = 1,
  DUHEM_STATUS_INVALID_ARGUMENT = 2,
  DUHEM_STATUS_CONFIG = 3,
  DUHEM_STATUS_INVALID_PARAMS = 4,
  // The system has not passed validation, or is not class I.
  DUHEM_STATUS_NOT_VALIDATED = 5,
  // A report was produced and it failed.
  DUHEM_STATUS_VERIFICATION_FAILED = 6,
  // Non-finite evaluation, step underflow, quadrature, inversion or
  // bracketing failure.
  DUHEM_STATUS_NUMERIC = 7,
  DUHEM_STATUS_IO = 8,
  DUHEM_STATUS_PANIC = 9,
} DuhemStatus;

typedef struct DuhemSystemHandle DuhemSystemHandle;

typedef struct DuhemTrajectoryHandle DuhemTrajectoryHandle;

// Integrator settings. `h_init <= 0` lets the adaptive method pick its
// first step; for `DUHEM_METHOD_RK4_FIXED` it is the step length.
typedef struct DuhemIntegratorOptions {
  enum DuhemMethod method;
  double rtol;
  double atol;
  double h_init;
  double h_max;
  double t_end;
  size_t max_steps;
} DuhemIntegratorOptions;

// Bouc-Wen parameters in the original model coordinates.
typedef struct DuhemBoucWenParams {
  double a;
  double beta;
  double gamma;
  double n;
  double alpha;
  double k;
  double d;
  double m;
  double b;
} DuhemBoucWenParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// The library version as a static NUL-terminated string.
const char *duhem_version(void);

// The message of the last failed call on this thread, or NULL. Valid until
// the next failing call on the same thread.
const char *duhem_last_error_message(void);

// Default integrator settings (adaptive, `t_end = 1e4`).
struct DuhemIntegratorOptions duhem_integrator_defaults(void);

// Builds the rescaled Duhem system for Bouc-Wen parameters.
//
// # Safety
// `params` must point to a valid struct and `out` to writable storage.
enum DuhemStatus duhem_system_boucwen(const struct DuhemBoucWenParams *params,
                                      struct DuhemSystemHandle **out);

// Builds a system from a JSON system description, the `system` object of
// an experiment configuration.
//
// # Safety
// `json` must be a NUL-terminated string and `out` writable.
enum DuhemStatus duhem_system_from_json(const char *json, struct DuhemSystemHandle **out);

// # Safety
// `h` must be NULL or a handle from this library not yet freed.
void duhem_system_free(struct DuhemSystemHandle *h);

// Runs structural validation on the default grid and marks the handle as
// validated when it passes. `valid` receives the outcome.
//
// # Safety
// `h` must be a live handle and `valid` writable.
enum DuhemStatus duhem_system_validate(struct DuhemSystemHandle *h, bool *valid);

// The last validation report as JSON. Fails with `NOT_VALIDATED` if
// validation has not been run.
//
// # Safety
// `h` must be a live handle and `json` writable.
enum DuhemStatus duhem_system_validation_json(const struct DuhemSystemHandle *h, char **json);

// Writes `(ẋ, ż, v̇)` at `state` into `out`.
//
// # Safety
// `state` and `out` must point to three doubles.
enum DuhemStatus duhem_rhs(const struct DuhemSystemHandle *h, const double *state, double *out);

// The stored energy `V` at `state`.
//
// # Safety
// `state` must point to three doubles and `out` be writable.
enum DuhemStatus duhem_energy(const struct DuhemSystemHandle *h, const double *state, double *out);

// The rate `V̇` along the vector field at `state`.
//
// # Safety
// `state` must point to three doubles and `out` be writable.
enum DuhemStatus duhem_energy_rate(const struct DuhemSystemHandle *h,
                                   const double *state,
                                   double *out);

// Integrates from `init`. `opts` may be NULL for the defaults.
//
// # Safety
// `init` must point to three doubles, `opts` be NULL or valid, `out`
// writable.
enum DuhemStatus duhem_integrate(const struct DuhemSystemHandle *h,
                                 const double *init,
                                 const struct DuhemIntegratorOptions *opts,
                                 struct DuhemTrajectoryHandle **out);

// Number of stored samples, 0 for NULL.
//
// # Safety
// `t` must be NULL or a live trajectory handle.
size_t duhem_trajectory_len(const struct DuhemTrajectoryHandle *t);

// Copies the sample times into `times[capacity]` and the states, row-major
// `x, z, v`, into `states[3 * capacity]`. Either buffer may be NULL.
//
// # Safety
// Non-NULL buffers must hold at least the stated number of doubles.
enum DuhemStatus duhem_trajectory_copy(const struct DuhemTrajectoryHandle *t,
                                       double *times,
                                       double *states,
                                       size_t capacity);

// Writes the trajectory CSV (`t,x,z,v[,z_orig],V,Vdot`) to `path`.
//
// # Safety
// Handles must be live and `path` NUL-terminated.
enum DuhemStatus duhem_trajectory_write_csv(const struct DuhemSystemHandle *h,
                                            const struct DuhemTrajectoryHandle *t,
                                            const char *path);

// # Safety
// `t` must be NULL or a handle from this library not yet freed.
void duhem_trajectory_free(struct DuhemTrajectoryHandle *t);

// The rest point `(a, a + L, 0)` on the line `z = x + L`.
//
// # Safety
// `out` must point to three doubles.
enum DuhemStatus duhem_predict_limit(const struct DuhemSystemHandle *h, double l, double *out);

// Euclidean distance from `(x, z)` to the equilibrium curve. `argmin` may
// be NULL or point to two doubles receiving the nearest curve point.
//
// # Safety
// `distance` must be writable; `argmin` NULL or two doubles.
enum DuhemStatus duhem_distance(const struct DuhemSystemHandle *h,
                                double x,
                                double z,
                                double *distance,
                                double *argmin);

// Integrates from `init` and verifies convergence, with the terminal
// relation for Bouc-Wen systems. Requires a validated handle. When a
// report is produced it is written to `report_json` (if non-NULL) whether
// or not it passed; the status is `OK` or `VERIFICATION_FAILED`.
//
// # Safety
// `init` must point to three doubles, `opts` be NULL or valid,
// `report_json` NULL or writable.
enum DuhemStatus duhem_verify(const struct DuhemSystemHandle *h,
                              const double *init,
                              const struct DuhemIntegratorOptions *opts,
                              char **report_json);

// # Safety
// `s` must be NULL or a string returned by this library.
void duhem_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DUHEM_H */
