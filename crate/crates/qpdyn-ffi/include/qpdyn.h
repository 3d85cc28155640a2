#pragma once

/* Generated with cbindgen:0.29.4 */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes of every FFI call.
typedef enum QpStatus {
  QpOk = 0,
  // A verification check failed (certificates, bounds).
  QpCheckFailure = 1,
  // Bad argument or configuration.
  QpInvalidArgument = 2,
  // The iteration halted (small divisor, contraction failure, ...).
  QpNumericalHalt = 3,
  QpNullPointer = 4,
  QpIoError = 5,
} QpStatus;

// Opaque frequency vector handle.
typedef struct QpFrequency QpFrequency;

// Opaque potential handle.
typedef struct QpPotential QpPotential;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copy the last error message of this thread into `buf` (NUL-terminated,
// truncated to `len`). Returns the full message length in bytes.
//
// # Safety
// `buf` must point to `len` writable bytes, or be null (query mode).
size_t qp_last_error_message(char *buf, size_t len);

// The golden mean frequency (√5 − 1)/2.
struct QpFrequency *qp_frequency_golden(void);

// A frequency vector from `d` components (d ∈ {1,2}); null on failure.
//
// # Safety
// `components` must point to `d` readable doubles.
struct QpFrequency *qp_frequency_new(const double *components, size_t d);

// # Safety
// `f` must come from a `qp_frequency_*` constructor and not be freed twice.
void qp_frequency_free(struct QpFrequency *f);

// Exhaustive Diophantine scan: writes 1 into `out` when
// dist(⟨n,α⟩, ℤ) > κ/|n|^τ for all 0 < |n| ≤ radius.
//
// # Safety
// `f` and `out` must be valid pointers.
enum QpStatus qp_frequency_is_diophantine(const struct QpFrequency *f,
                                          double kappa,
                                          double tau,
                                          int64_t radius,
                                          bool *out);

// The zero potential on T^d.
struct QpPotential *qp_potential_zero(size_t d);

// The almost Mathieu potential 2λ cos 2πθ.
struct QpPotential *qp_potential_almost_mathieu(double lambda);

// A d = 1 potential from cosine amplitudes: V(θ) = Σ_k amps[k-1]·cos 2πkθ,
// scaled by `coupling`.
//
// # Safety
// `amps` must point to `n_amps` readable doubles.
struct QpPotential *qp_potential_from_cosines(const double *amps, size_t n_amps, double coupling);

// # Safety
// `p` must come from a `qp_potential_*` constructor and not be freed twice.
void qp_potential_free(struct QpPotential *p);

// Fibered rotation number of the Schrödinger cocycle at `energy`, folded to
// [0, 1/2]; the estimator spread lands in `err_out` when non-null.
//
// # Safety
// Handles must be valid; `rho_out` must be writable.
enum QpStatus qp_rotation_number(const struct QpPotential *pot,
                                 const struct QpFrequency *freq,
                                 double energy,
                                 uint64_t n_iters,
                                 uint32_t n_phases,
                                 double *rho_out,
                                 double *err_out);

// Top Lyapunov exponent at `energy` (clamped at 0).
//
// # Safety
// Handles must be valid; `out` must be writable.
enum QpStatus qp_lyapunov_exponent(const struct QpPotential *pot,
                                   const struct QpFrequency *freq,
                                   double energy,
                                   uint64_t n_iters,
                                   uint32_t n_phases,
                                   double *out);

// Integrated density of states N(E) = 1 − 2ρ(E).
//
// # Safety
// Handles must be valid; `out` must be writable.
enum QpStatus qp_ids(const struct QpPotential *pot,
                     const struct QpFrequency *freq,
                     double energy,
                     uint64_t n_iters,
                     uint32_t n_phases,
                     double *out);

// Invariant-cone hyperbolicity certificate at `energy`; writes 1 when
// certified. A 0 only means not detected at this resolution.
//
// # Safety
// Handles must be valid; `out` must be writable.
enum QpStatus qp_is_uniformly_hyperbolic(const struct QpPotential *pot,
                                         const struct QpFrequency *freq,
                                         double energy,
                                         uint32_t n_max,
                                         size_t grid_n,
                                         bool *out);

// Scan `[e0, e1]` on `n_grid` points and write the per-energy CSV
// (E, rho, lyap, uh, gap_id, label) to `path`.
//
// # Safety
// Handles must be valid; `path` must be a NUL-terminated UTF-8 string.
enum QpStatus qp_scan_to_csv(const struct QpPotential *pot,
                             const struct QpFrequency *freq,
                             double e0,
                             double e1,
                             size_t n_grid,
                             const char *path);

// Summary of a Diophantine-branch KAM reduction at `energy`: final
// perturbation size, conjugation residual and accumulated degree.
//
// # Safety
// Handles must be valid; out pointers must be writable or null.
enum QpStatus qp_reduce_diophantine(const struct QpPotential *pot,
                                    const struct QpFrequency *freq,
                                    double energy,
                                    double gamma,
                                    double tau,
                                    double *final_eps_out,
                                    double *residual_out,
                                    int64_t *degree_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus
