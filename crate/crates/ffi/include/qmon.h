#ifndef QMON_H
#define QMON_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every fallible call.
typedef enum QmonStatus {
  QMON_STATUS_OK = 0,
  QMON_STATUS_NULL_POINTER = 1,
  QMON_STATUS_INVALID_ARGUMENT = 2,
  QMON_STATUS_DIMENSION_MISMATCH = 3,
  QMON_STATUS_INVALID_STATE = 4,
  QMON_STATUS_SOLVER_NOT_FOUND = 5,
  QMON_STATUS_DIMENSION_CAP = 6,
  QMON_STATUS_BUFFER_TOO_SMALL = 7,
  QMON_STATUS_PANIC = 8,
} QmonStatus;

// Opaque square complex matrix.
typedef struct QmonOperator QmonOperator;

// Opaque phase vector of a unitary observable.
typedef struct QmonPhases QmonPhases;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the calling thread's last error message into `buf` (NUL
// terminated, truncated to `len`). Returns the length the full message
// needs including the terminator.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
size_t qmon_last_error_message(char *buf, size_t len);

// Builds a phase vector from `d` phases summing to zero modulo 2π.
//
// # Safety
// `phases` must point to `d` readable doubles; `out` must be writable.
enum QmonStatus qmon_phases_new(const double *phases, size_t d, struct QmonPhases **out);

// Analytic family `(θ, -θ, 0, …, 0)` in dimension `d`.
//
// # Safety
// `out` must be writable.
enum QmonStatus qmon_phases_analytic(size_t d, double theta, struct QmonPhases **out);

// Numerically solves the phase constraint system for noise `eta`.
// Returns `QMON_STATUS_SOLVER_NOT_FOUND` when no start converges.
//
// # Safety
// `out` must be writable.
enum QmonStatus qmon_phases_solve(size_t d,
                                  double eta,
                                  uint64_t seed,
                                  double tol,
                                  struct QmonPhases **out);

// Number of phases, or 0 for a null handle.
//
// # Safety
// `phases` must be null or a live handle.
size_t qmon_phases_dim(const struct QmonPhases *phases);

// Copies the phases into `out`, which must hold at least `len` doubles.
//
// # Safety
// `phases` must be a live handle; `out` must point to `len` writable doubles.
enum QmonStatus qmon_phases_get(const struct QmonPhases *phases, double *out, size_t len);

// `η = (1/d) Σ cos φ_q`, checked to lie in `[0, 1]`.
//
// # Safety
// `phases` must be a live handle; `out` must be writable.
enum QmonStatus qmon_phases_eta(const struct QmonPhases *phases, double *out);

// `⟨0|(T^j)† T^i|0⟩` for the observable built from `phases`.
//
// # Safety
// `phases` must be a live handle; `re` and `im` must be writable.
enum QmonStatus qmon_vacuum_overlap(const struct QmonPhases *phases,
                                    int64_t i,
                                    int64_t j,
                                    double *re,
                                    double *im);

// Matrix of `T` for `phases` as a new operator.
//
// # Safety
// `phases` must be a live handle; `out` must be writable.
enum QmonStatus qmon_observable_matrix(const struct QmonPhases *phases, struct QmonOperator **out);

// # Safety
// `phases` must be null or a handle not yet freed.
void qmon_phases_free(struct QmonPhases *phases);

// Builds a `dim × dim` operator from row-major real and imaginary parts.
//
// # Safety
// `re` and `im` must each point to `dim * dim` readable doubles.
enum QmonStatus qmon_operator_from_parts(const double *re,
                                         const double *im,
                                         size_t dim,
                                         struct QmonOperator **out);

// Seeded random density matrix of the given rank.
//
// # Safety
// `out` must be writable.
enum QmonStatus qmon_operator_random_density(size_t dim,
                                             size_t rank,
                                             uint64_t seed,
                                             struct QmonOperator **out);

// Matrix dimension, or 0 for a null handle.
//
// # Safety
// `op` must be null or a live handle.
size_t qmon_operator_dim(const struct QmonOperator *op);

// Copies the entries row-major into `re` and `im`, each holding `len`
// doubles.
//
// # Safety
// `op` must be a live handle; `re` and `im` must point to `len` writable
// doubles.
enum QmonStatus qmon_operator_copy_parts(const struct QmonOperator *op,
                                         double *re,
                                         double *im,
                                         size_t len);

// # Safety
// `op` must be null or a handle not yet freed.
void qmon_operator_free(struct QmonOperator *op);

// Von Neumann entropy in bits.
//
// # Safety
// `rho` must be a live handle; `out` must be writable.
enum QmonStatus qmon_entropy(const struct QmonOperator *rho, double *out);

// `½‖a - b‖₁`.
//
// # Safety
// `a` and `b` must be live handles; `out` must be writable.
enum QmonStatus qmon_trace_distance(const struct QmonOperator *a,
                                    const struct QmonOperator *b,
                                    double *out);

// Full dephasing of factor `A` of a `d_a × d_b` state.
//
// # Safety
// `rho` must be a live handle; `out` must be writable.
enum QmonStatus qmon_dephase(const struct QmonOperator *rho,
                             size_t d_a,
                             size_t d_b,
                             struct QmonOperator **out);

// `(1 - ε) ρ + ε Φ_A(ρ)`.
//
// # Safety
// `rho` must be a live handle; `out` must be writable.
enum QmonStatus qmon_monitor(const struct QmonOperator *rho,
                             size_t d_a,
                             size_t d_b,
                             double epsilon,
                             struct QmonOperator **out);

// `S(Φ_A(ρ)) - S(ρ)` in bits.
//
// # Safety
// `rho` must be a live handle; `out` must be writable.
enum QmonStatus qmon_irreality(const struct QmonOperator *rho, size_t d_a, size_t d_b, double *out);

// State of `A ⊗ B` after interacting with `n` environment qudits.
//
// # Safety
// `rho` and `phases` must be live handles; `out` must be writable.
enum QmonStatus qmon_system_state_after(const struct QmonOperator *rho,
                                        const struct QmonPhases *phases,
                                        size_t n,
                                        size_t d_b,
                                        struct QmonOperator **out);

// State of `A ⊗ B ⊗ F_m` after interacting with `n` environment qudits.
//
// # Safety
// `rho` and `phases` must be live handles; `out` must be writable.
enum QmonStatus qmon_reduced_state(const struct QmonOperator *rho,
                                   const struct QmonPhases *phases,
                                   size_t n,
                                   size_t d_b,
                                   size_t m,
                                   struct QmonOperator **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QMON_H */
