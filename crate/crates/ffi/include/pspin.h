#ifndef PSPIN_H
#define PSPIN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Two-time field selector.
typedef enum PspinField {
  PSPIN_FIELD_C = 0,
  PSPIN_FIELD_R = 1,
  PSPIN_FIELD_Q = 2,
} PspinField;

// One-time series selector.
typedef enum PspinSeries {
  PSPIN_SERIES_M = 0,
  PSPIN_SERIES_K = 1,
  PSPIN_SERIES_D = 2,
  PSPIN_SERIES_MU = 3,
} PspinSeries;

// Result codes of every fallible call.
typedef enum PspinStatus {
  PSPIN_STATUS_OK = 0,
  PSPIN_STATUS_NULL_POINTER = 1,
  PSPIN_STATUS_INVALID_PARAMETER = 2,
  PSPIN_STATUS_BLOW_UP = 3,
  PSPIN_STATUS_RESOURCE = 4,
  PSPIN_STATUS_NO_SOLUTION = 5,
  PSPIN_STATUS_OUT_OF_RANGE = 6,
  PSPIN_STATUS_BUFFER_TOO_SMALL = 7,
  PSPIN_STATUS_PANIC = 8,
  PSPIN_STATUS_OTHER = 9,
} PspinStatus;

// Output of an integration run.
typedef struct PspinBundle PspinBundle;

// Stationary FDT solution.
typedef struct PspinFdt PspinFdt;

// Coefficients `a_1, a_2, ...` of the mixture.
typedef struct PspinMixture PspinMixture;

// Model parameters including the confinement.
typedef struct PspinParams PspinParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *pspin_version(void);

// Copies the last error message of this thread into `buf` (NUL-terminated,
// truncated to `len`). Returns the full message length, 0 if none.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
size_t pspin_last_error(char *buf, size_t len);

// Mixture from `len` coefficients `a_1 .. a_len`.
//
// # Safety
// `a` must point to `len` doubles; `out` must be a valid pointer.
enum PspinStatus pspin_mixture_new(const double *a, size_t len, struct PspinMixture **out);

// `nu^(order)(x)` for `order` in 0..=2.
//
// # Safety
// `mix` must come from [`pspin_mixture_new`]; `out` must be valid.
enum PspinStatus pspin_mixture_nu(const struct PspinMixture *mix,
                                  double x,
                                  uint32_t order,
                                  double *out);

// # Safety
// `mix` must be null or come from [`pspin_mixture_new`], and not be used afterwards.
void pspin_mixture_free(struct PspinMixture *mix);

// Hard spherical constraint `|x|^2 = rN` with constant `k`.
//
// # Safety
// `mix` must come from [`pspin_mixture_new`]; `out` must be valid.
enum PspinStatus pspin_params_new_hard(double beta,
                                       double h,
                                       double r,
                                       double alpha,
                                       double k,
                                       const struct PspinMixture *mix,
                                       struct PspinParams **out);

// Soft confinement `L (x - r)^2 + (x/r)^(2 k_exp) / (4 k_exp) + alpha h x / r`.
//
// # Safety
// `mix` must come from [`pspin_mixture_new`]; `out` must be valid.
enum PspinStatus pspin_params_new_soft(double beta,
                                       double h,
                                       double r,
                                       double alpha,
                                       double l,
                                       uint32_t k_exp,
                                       const struct PspinMixture *mix,
                                       struct PspinParams **out);

// # Safety
// `params` must be null or come from a `pspin_params_new_*` call, and not be used afterwards.
void pspin_params_free(struct PspinParams *params);

// Integrates on `[0, t_max]` with step `dt`. On blow-up no bundle is
// returned and the message names the failing row.
//
// # Safety
// `params` must come from a `pspin_params_new_*` call; `out` must be valid.
enum PspinStatus pspin_integrate(const struct PspinParams *params,
                                 double dt,
                                 double t_max,
                                 size_t corrector_iters,
                                 struct PspinBundle **out);

// Number of grid rows, 0 for a null handle.
//
// # Safety
// `bundle` must be null or a live bundle handle.
size_t pspin_bundle_len(const struct PspinBundle *bundle);

// Grid step, NaN for a null handle.
//
// # Safety
// `bundle` must be null or a live bundle handle.
double pspin_bundle_dt(const struct PspinBundle *bundle);

// `field(s_i, t_j)`; `j > i` reads the symmetric entry for `C`, `Q` and 0 for `R`.
//
// # Safety
// `bundle` must be a live bundle handle; `out` must be valid.
enum PspinStatus pspin_bundle_get(const struct PspinBundle *bundle,
                                  enum PspinField field,
                                  size_t i,
                                  size_t j,
                                  double *out);

// Copies a one-time series (length [`pspin_bundle_len`]) into `buf`.
//
// # Safety
// `bundle` must be a live bundle handle; `buf` must hold `len` doubles.
enum PspinStatus pspin_bundle_series(const struct PspinBundle *bundle,
                                     enum PspinSeries series,
                                     double *buf,
                                     size_t len);

// # Safety
// `bundle` must be null or a live bundle handle, and not be used afterwards.
void pspin_bundle_free(struct PspinBundle *bundle);

// Stationary overlap `Q^fdt(beta, h)`.
//
// # Safety
// `mix` must come from [`pspin_mixture_new`]; `out` must be valid.
enum PspinStatus pspin_solve_qfdt(double beta,
                                  double h,
                                  const struct PspinMixture *mix,
                                  double *out);

// Full stationary solution on the lag grid `0, dt, ..., tau_max`.
//
// # Safety
// `mix` must come from [`pspin_mixture_new`]; `out` must be valid.
enum PspinStatus pspin_solve_fdt(double beta,
                                 double h,
                                 const struct PspinMixture *mix,
                                 double dt,
                                 double tau_max,
                                 struct PspinFdt **out);

// Number of lags, 0 for a null handle.
//
// # Safety
// `fdt` must be null or a live FDT handle.
size_t pspin_fdt_len(const struct PspinFdt *fdt);

// Overlap, magnetization and drift coefficient of the stationary state.
//
// # Safety
// `fdt` must be a live FDT handle; each output must be null or valid.
enum PspinStatus pspin_fdt_scalars(const struct PspinFdt *fdt, double *q, double *m, double *mu);

// Copies `C_fdt` (`field = C`) or `R_fdt` (`field = R`) into `buf`.
//
// # Safety
// `fdt` must be a live FDT handle; `buf` must hold `len` doubles.
enum PspinStatus pspin_fdt_copy(const struct PspinFdt *fdt,
                                enum PspinField field,
                                double *buf,
                                size_t len);

// # Safety
// `fdt` must be null or a live FDT handle, and not be used afterwards.
void pspin_fdt_free(struct PspinFdt *fdt);

// Predicted transition `beta_c(h)` and the overlap there.
//
// # Safety
// `mix` must come from [`pspin_mixture_new`]; `beta_out` must be valid,
// `q_out` null or valid.
enum PspinStatus pspin_beta_c(double h,
                              const struct PspinMixture *mix,
                              double tol,
                              double *beta_out,
                              double *q_out);

// Reads a NUL-terminated TOML configuration and validates it, without running anything.
//
// # Safety
// `text` must be a valid NUL-terminated string.
enum PspinStatus pspin_config_validate(const char *text);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PSPIN_H */
