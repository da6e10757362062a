#ifndef TMS_H
#define TMS_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum TmsStatus {
  TMS_STATUS_OK = 0,
  TMS_STATUS_NULL_POINTER = 1,
  TMS_STATUS_DOMAIN = 2,
  TMS_STATUS_NOT_BRACKETED = 3,
  TMS_STATUS_NOT_CONVERGED = 4,
  TMS_STATUS_LINEAR_ALGEBRA = 5,
  TMS_STATUS_MISMATCH = 6,
  TMS_STATUS_INVALID_ARGUMENT = 7,
  TMS_STATUS_PANIC = 8,
} TmsStatus;

/**
 * Radial measure selector for [`tms_grid_new`].
 */
typedef enum TmsMeasure {
  TMS_MEASURE_L2 = 0,
  TMS_MEASURE_HMINUS12 = 1,
  TMS_MEASURE_HPLUS12 = 2,
  TMS_MEASURE_HMINUS32 = 3,
} TmsMeasure;

/**
 * Opaque radial grid.
 */
typedef struct TmsGrid TmsGrid;

/**
 * Opaque kernel specification.
 */
typedef struct TmsSpec TmsSpec;

typedef struct TmsThresholds {
  double m_star;
  double m_star_star;
  double m_minlos;
  double m_of_zero;
  double cross_consistency;
} TmsThresholds;

typedef struct TmsSchur {
  double sup_row;
  double sup_col;
  double argmax_r;
  double refinement_delta;
} TmsSchur;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Crate version as a static NUL-terminated string.
 */
const char *tms_version(void);

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length in bytes.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
size_t tms_last_error(char *buf, size_t len);

/**
 * # Safety
 * `out` must be valid for writes.
 */
enum TmsStatus tms_efimov_lambda(double m, double *out);

/**
 * # Safety
 * `out` must be valid for writes.
 */
enum TmsStatus tms_thresholds(struct TmsThresholds *out);

/**
 * # Safety
 * `out` must be valid for writes.
 */
enum TmsStatus tms_s_of_m(double m, double *out);

/**
 * # Safety
 * `out` must be valid for writes.
 */
enum TmsStatus tms_cancellation_coefficient(double s, double m, double k, double p, double *out);

/**
 * Creates a kernel spec for mass ratio `m`, sector `ell`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum TmsStatus tms_spec_new(double m, double lambda, double alpha, int ell, struct TmsSpec **out);

/**
 * # Safety
 * `spec` must be null or a handle from `tms_spec_new` not yet freed.
 */
void tms_spec_free(struct TmsSpec *spec);

/**
 * # Safety
 * `spec` must be a live handle; `out` valid for writes.
 */
enum TmsStatus tms_kernel_t(const struct TmsSpec *spec, double r, double rp, double *out);

/**
 * # Safety
 * `spec` must be a live handle; `out` valid for writes.
 */
enum TmsStatus tms_kernel_w(const struct TmsSpec *spec, double r, double rp, double *out);

/**
 * Builds a geometric panel grid on `[r_min, r_max]` plus the origin panel.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum TmsStatus tms_grid_new(size_t n_panels,
                            size_t nodes_per_panel,
                            double r_min,
                            double r_max,
                            enum TmsMeasure measure,
                            struct TmsGrid **out);

/**
 * # Safety
 * `grid` must be null or a handle from `tms_grid_new` not yet freed.
 */
void tms_grid_free(struct TmsGrid *grid);

/**
 * # Safety
 * `grid` must be a live handle; `out` valid for writes.
 */
enum TmsStatus tms_grid_len(const struct TmsGrid *grid, size_t *out);

/**
 * Bottom of `2(T + α)` against `W`; the grid should carry the `L2` measure.
 *
 * # Safety
 * Handles must be live; `out` valid for writes.
 */
enum TmsStatus tms_bottom(const struct TmsSpec *spec, const struct TmsGrid *grid, double *out);

/**
 * Two smallest singular values in the `H^{-1/2} → H^{-3/2}` geometry; the
 * grid must carry the `Hminus12` measure.
 *
 * # Safety
 * Handles must be live; out pointers valid for writes.
 */
enum TmsStatus tms_smallest_singular(const struct TmsSpec *spec,
                                     const struct TmsGrid *grid,
                                     double *sigma_min,
                                     double *sigma_next);

/**
 * # Safety
 * `out` must be valid for writes.
 */
enum TmsStatus tms_schur_bounds(size_t ell,
                                size_t n_panels,
                                size_t nodes_per_panel,
                                double r_min,
                                double r_max,
                                struct TmsSchur *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TMS_H */
