#ifndef SKETCHLAB_H
#define SKETCHLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SlStatus {
  SL_STATUS_OK = 0,
  SL_STATUS_NULL_POINTER = 1,
  SL_STATUS_INVALID_ARGUMENT = 2,
  SL_STATUS_DIMENSION_MISMATCH = 3,
  SL_STATUS_INVALID_SPEC = 4,
  SL_STATUS_DIMENSION_TOO_SMALL = 5,
  SL_STATUS_RANK_DEFICIENT = 6,
  SL_STATUS_NOT_PSD = 7,
  SL_STATUS_INFEASIBLE_BUDGET = 8,
  SL_STATUS_NUMERICAL = 9,
  SL_STATUS_PANIC = 10,
} SlStatus;

typedef enum SlEmbeddingKind {
  SL_EMBEDDING_KIND_GAUSSIAN = 0,
  SL_EMBEDDING_KIND_HAAR_ORTHONORMAL = 1,
  SL_EMBEDDING_KIND_SIGN = 2,
  SL_EMBEDDING_KIND_UNIFORM = 3,
  SL_EMBEDDING_KIND_SPARSE_IID = 4,
  SL_EMBEDDING_KIND_SPARSE_STACK = 5,
  SL_EMBEDDING_KIND_SRTT = 6,
  SL_EMBEDDING_KIND_GIVENS = 7,
} SlEmbeddingKind;

typedef enum SlBound {
  /**
   * Gaussian sketch-and-solve ratio; uses `field`, `r`, `ell`.
   */
  SL_BOUND_SKETCH_SOLVE_GAUSSIAN = 0,
  /**
   * Haar sketch-and-solve ratio; uses `field`, `n`, `r`, `ell`.
   */
  SL_BOUND_SKETCH_SOLVE_HAAR = 1,
  /**
   * Randomized SVD lower factor; uses `field`, `r`, `ell`, `q`.
   */
  SL_BOUND_RSVD_LOWER_FACTOR = 2,
  /**
   * Generalized Nyström prefactor; uses `field`, `d`, `ell`, `k`, `gamma_haar`.
   */
  SL_BOUND_GN_PREFACTOR = 3,
  /**
   * Generalized Nyström lower factor; uses `field`, `d`, `r`, `ell`, `k`, `q`, `gamma_haar`.
   */
  SL_BOUND_GN_LOWER_FACTOR = 4,
} SlBound;

typedef enum SlField {
  SL_FIELD_REAL = 0,
  SL_FIELD_COMPLEX = 1,
} SlField;

/**
 * Dense real matrix.
 */
typedef struct SlMatrix SlMatrix;

/**
 * Parameters for `sl_bound`; fields a bound does not use are ignored.
 */
typedef struct SlBoundQuery {
  enum SlField field;
  size_t n;
  size_t d;
  size_t r;
  size_t ell;
  size_t k;
  size_t q;
  /**
   * Nonzero for a Haar left sketch, zero for Gaussian.
   */
  int32_t gamma_haar;
} SlBoundQuery;

/**
 * A `(k, ell)` split of a matvec budget.
 */
typedef struct SlSplit {
  size_t k;
  size_t ell;
  double objective;
} SlSplit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *sl_version(void);

/**
 * Message for the last failed call on this thread; empty after a success.
 * Valid until the next sketchlab call on the same thread.
 */
const char *sl_last_error_message(void);

/**
 * Copies `rows * cols` column-major values into a new matrix.
 *
 * # Safety
 * `data` must point to `rows * cols` readable doubles; `out` must be writable.
 */
enum SlStatus sl_matrix_new(size_t rows, size_t cols, const double *data, struct SlMatrix **out);

/**
 * # Safety
 * `m` must be null or a live handle.
 */
size_t sl_matrix_rows(const struct SlMatrix *m);

/**
 * # Safety
 * `m` must be null or a live handle.
 */
size_t sl_matrix_cols(const struct SlMatrix *m);

/**
 * Copies the entries column-major into `buf`, which holds `len` doubles.
 *
 * # Safety
 * `m` must be a live handle and `buf` must point to `len` writable doubles.
 */
enum SlStatus sl_matrix_copy(const struct SlMatrix *m, double *buf, size_t len);

/**
 * Releases a handle; null is ignored.
 *
 * # Safety
 * `m` must be null or a handle not yet freed.
 */
void sl_matrix_free(struct SlMatrix *m);

/**
 * Samples an `n x ell` embedding as a dense matrix from stream `stream` of
 * `seed`. `zeta = 0` selects the default sparsity.
 *
 * # Safety
 * `out` must be writable.
 */
enum SlStatus sl_embedding_sample(enum SlEmbeddingKind kind,
                                  size_t n,
                                  size_t ell,
                                  size_t zeta,
                                  uint64_t seed,
                                  uint64_t stream,
                                  struct SlMatrix **out);

/**
 * `Xhat = (Omega* A)^+ (Omega* B)`; also reports `|B - A Xhat|^2 / |B - A A^+ B|^2 - 1`.
 *
 * # Safety
 * Handles must be live; out-pointers writable (`epsilon` may be null).
 */
enum SlStatus sl_sketch_and_solve(const struct SlMatrix *a,
                                  const struct SlMatrix *b,
                                  const struct SlMatrix *omega,
                                  struct SlMatrix **xhat,
                                  double *epsilon);

/**
 * Randomized SVD `A ~ Q (Q* A)`; writes `Q`, `Q* A` and `|A - Q Q* A|_F^2`.
 *
 * # Safety
 * Handles must be live; out-pointers writable (`err_sq` may be null).
 */
enum SlStatus sl_randomized_svd(const struct SlMatrix *a,
                                const struct SlMatrix *omega,
                                struct SlMatrix **q,
                                struct SlMatrix **qa,
                                double *err_sq);

/**
 * Nyström approximation `H ~ F F*` of a psd `H`; writes `F` and `tr(H - F F*)`.
 *
 * # Safety
 * Handles must be live; out-pointers writable (`err` may be null).
 */
enum SlStatus sl_nystrom(const struct SlMatrix *h,
                         const struct SlMatrix *omega,
                         struct SlMatrix **f,
                         double *err);

/**
 * Generalized Nyström `A Omega (Psi* A Omega)^+ Psi* A`; writes the dense
 * approximation and its squared Frobenius error.
 *
 * # Safety
 * Handles must be live; out-pointers writable (`err_sq` may be null).
 */
enum SlStatus sl_generalized_nystrom(const struct SlMatrix *a,
                                     const struct SlMatrix *omega,
                                     const struct SlMatrix *psi,
                                     struct SlMatrix **approx,
                                     double *err_sq);

/**
 * Evaluates one closed-form bound.
 *
 * # Safety
 * `query` must be readable and `out` writable.
 */
enum SlStatus sl_bound(enum SlBound which, const struct SlBoundQuery *query, double *out);

/**
 * Best integer split `k + ell = t` for target rank `q`. `real_objective`
 * nonzero selects the real-field offsets.
 *
 * # Safety
 * `out` must be writable.
 */
enum SlStatus sl_plan_split(size_t q, size_t t, int32_t real_objective, struct SlSplit *out);

/**
 * Matvec budget for a `(1 + epsilon)` guarantee at rank `q`; `rsvd` nonzero
 * selects randomized SVD, zero generalized Nyström.
 *
 * # Safety
 * `out` must be writable.
 */
enum SlStatus sl_budget_for_epsilon(size_t q, double epsilon, int32_t rsvd, size_t *out);

/**
 * Minimal and sufficient sketch-and-solve embedding dimensions.
 *
 * # Safety
 * Out-pointers must be writable.
 */
enum SlStatus sl_ss_dimensions(size_t r,
                               enum SlField field,
                               double epsilon,
                               size_t *ell_min,
                               size_t *ell_sufficient);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SKETCHLAB_H */
