#ifndef LINDYN_H
#define LINDYN_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Result of every fallible call.
 */
typedef enum LindynStatus {
  LINDYN_STATUS_OK = 0,
  LINDYN_STATUS_NULL_POINTER = 1,
  LINDYN_STATUS_INVALID_ARGUMENT = 2,
  LINDYN_STATUS_DIMENSION_MISMATCH = 3,
  LINDYN_STATUS_WINDOW_VIOLATION = 4,
  LINDYN_STATUS_NUMERICAL_FAILURE = 5,
  LINDYN_STATUS_PANIC = 6,
} LindynStatus;

/**
 * Criterion witness data.
 */
typedef struct LindynCriterion LindynCriterion;

/**
 * Operator on a truncated sequence space.
 */
typedef struct LindynOp LindynOp;

/**
 * Result of a certifier run.
 */
typedef struct LindynReport LindynReport;

/**
 * Vector in a truncated sequence space.
 */
typedef struct LindynVec LindynVec;

/**
 * One index of a certifier run.
 */
typedef struct LindynRecord {
  size_t k;
  size_t n_k;
  double max_product;
  double max_reconstruction_error;
  double max_orbit_norm;
  double max_right_norm;
  bool window_ok;
} LindynRecord;

/**
 * Best approximation from the scaled orbit.
 */
typedef struct LindynOrbitHit {
  size_t n;
  double alpha_re;
  double alpha_im;
  double distance;
} LindynOrbitHit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failing call on this thread, or null. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *lindyn_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *lindyn_version(void);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void lindyn_string_free(char *s);

/**
 * `c·B` on `ℓᵖ_dim`, `c = weight_re + i·weight_im`. Use `p = INFINITY` for `ℓ^∞`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum LindynStatus lindyn_op_shift(double p,
                                  size_t dim,
                                  double weight_re,
                                  double weight_im,
                                  struct LindynOp **out);

/**
 * Operator from `dim × dim` interleaved row-major entries.
 *
 * # Safety
 * `entries` must hold `2·dim·dim` doubles; `out` must be valid for writes.
 */
enum LindynStatus lindyn_op_from_matrix(double p,
                                        size_t dim,
                                        const double *entries,
                                        struct LindynOp **out);

/**
 * Operator norm (exact for p = 1, 2, ∞; a lower estimate otherwise).
 *
 * # Safety
 * `op` must be a live handle; `out` must be valid for writes.
 */
enum LindynStatus lindyn_op_norm(const struct LindynOp *op, double *out);

/**
 * # Safety
 * `op` must come from this library and not have been freed.
 */
void lindyn_op_free(struct LindynOp *op);

/**
 * Vector from `dim` interleaved coordinates.
 *
 * # Safety
 * `coords` must hold `2·dim` doubles; `out` must be valid for writes.
 */
enum LindynStatus lindyn_vec_new(double p,
                                 size_t dim,
                                 const double *coords,
                                 struct LindynVec **out);

/**
 * # Safety
 * `v` must be a live handle; `out` must be valid for writes.
 */
enum LindynStatus lindyn_vec_norm(const struct LindynVec *v, double *out);

/**
 * Copies the interleaved coordinates into `buf`, which holds `2·len` doubles.
 *
 * # Safety
 * `v` must be a live handle; `buf` must be valid for `2·len` writes.
 */
enum LindynStatus lindyn_vec_coords(const struct LindynVec *v, double *buf, size_t len);

/**
 * # Safety
 * `v` must come from this library and not have been freed.
 */
void lindyn_vec_free(struct LindynVec *v);

/**
 * `T x` as a new vector.
 *
 * # Safety
 * Handles must be live; `out` must be valid for writes.
 */
enum LindynStatus lindyn_op_apply(const struct LindynOp *op,
                                  const struct LindynVec *x,
                                  struct LindynVec **out);

/**
 * Shift instance: `T = c·B`, `S_k = (c⁻¹F)^k`, `n_k = k` for `k ≤ kmax`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum LindynStatus lindyn_criterion_shift(double p,
                                         size_t dim,
                                         double weight_re,
                                         double weight_im,
                                         size_t kmax,
                                         struct LindynCriterion **out);

/**
 * # Safety
 * `c` must come from this library and not have been freed.
 */
void lindyn_criterion_free(struct LindynCriterion *c);

/**
 * Supercyclicity (`hyper = false`) or hypercyclicity (`hyper = true`)
 * certifier. Window violations are reported in the verdict, not the status.
 *
 * # Safety
 * `data` must be a live handle; `out` must be valid for writes.
 */
enum LindynStatus lindyn_certify(const struct LindynCriterion *data,
                                 bool hyper,
                                 double tol,
                                 struct LindynReport **out);

/**
 * Verdict as the CLI exit code: 0 pass, 2 fail, 3 window violation.
 *
 * # Safety
 * `r` must be a live handle; `out` must be valid for writes.
 */
enum LindynStatus lindyn_report_verdict(const struct LindynReport *r, int32_t *out);

/**
 * # Safety
 * `r` must be a live handle; `out` must be valid for writes.
 */
enum LindynStatus lindyn_report_len(const struct LindynReport *r, size_t *out);

/**
 * # Safety
 * `r` must be a live handle; `out` must be valid for writes.
 */
enum LindynStatus lindyn_report_record(const struct LindynReport *r,
                                       size_t index,
                                       struct LindynRecord *out);

/**
 * Full report as JSON; release with [`lindyn_string_free`].
 *
 * # Safety
 * `r` must be a live handle; `out` must be valid for writes.
 */
enum LindynStatus lindyn_report_json(const struct LindynReport *r, char **out);

/**
 * # Safety
 * `r` must come from this library and not have been freed.
 */
void lindyn_report_free(struct LindynReport *r);

/**
 * Audits the ideal axioms for Schatten-`schatten_p` (`INFINITY` for the
 * operator-norm ideal) on `ℓ²_dim`; `holds` receives the verdict at `tol`.
 *
 * # Safety
 * `holds` must be valid for writes.
 */
enum LindynStatus lindyn_audit_ideal(double schatten_p,
                                     size_t dim,
                                     size_t samples,
                                     uint64_t seed,
                                     double tol,
                                     bool *holds);

/**
 * Bounds on the projective norm of the tensor with `d1 × d2` interleaved
 * row-major coefficients in `ℓ^{p1} ⊗ ℓ^{p2}`. `lower` is the nuclear norm on
 * `ℓ² ⊗ ℓ²` and a dual bound otherwise.
 *
 * # Safety
 * `coeff` must hold `2·d1·d2` doubles; outputs must be valid for writes.
 */
enum LindynStatus lindyn_projective_norm(double p1,
                                         size_t d1,
                                         double p2,
                                         size_t d2,
                                         const double *coeff,
                                         size_t iters,
                                         uint64_t seed,
                                         double *upper,
                                         double *lower);

/**
 * Closest point to `target` on the lines `ℂ·Tⁿx`, `n ≤ horizon`.
 *
 * # Safety
 * Handles must be live; `out` must be valid for writes.
 */
enum LindynStatus lindyn_scaled_orbit_distance(const struct LindynOp *op,
                                               const struct LindynVec *x,
                                               const struct LindynVec *target,
                                               size_t horizon,
                                               struct LindynOrbitHit *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LINDYN_H */
