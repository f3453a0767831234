#ifndef FRACSPEC_H
#define FRACSPEC_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

#define FS_OK 0

/**
 * Argument outside its valid range.
 */
#define FS_ERR_INVALID 2

/**
 * A numerical routine failed to converge.
 */
#define FS_ERR_NUMERICAL 3

/**
 * A required pointer was null.
 */
#define FS_ERR_NULL 4

/**
 * Internal panic caught at the boundary.
 */
#define FS_ERR_PANIC 5

#define FS_MODEL_FBM 0

#define FS_MODEL_FBN 1

#define FS_ORDER_FIRST 1

#define FS_ORDER_SECOND 2

/**
 * Karhunen–Loève fBm paths.
 */
typedef struct FsSample FsSample;

/**
 * Reference spectrum of a discretised covariance operator.
 */
typedef struct FsSpectrum FsSpectrum;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *fs_last_error(void);

/**
 * Asymptotic eigenvalue λ_n (order 1 or 2).
 *
 * # Safety
 * `out` must be null or point to writable memory for one `double`.
 */
int32_t fs_lambda_asymptotic(int32_t model, int32_t order, uintptr_t n, double h, double *out);

/**
 * Frequency ν_n and eigenvalue λ_n from the integro-algebraic solver.
 *
 * # Safety
 * `nu` and `lambda` must be null or point to writable `double`s.
 */
int32_t fs_solve_mode(int32_t model, uintptr_t n, double h, double *nu, double *lambda);

/**
 * Computes the first `n_max` eigenpairs on a grid of `n_grid` points.
 *
 * # Safety
 * `out` must be null or point to writable storage for one handle pointer.
 */
int32_t fs_spectrum_new(int32_t model,
                        double h,
                        uintptr_t n_grid,
                        uintptr_t n_max,
                        struct FsSpectrum **out);

/**
 * Number of eigenvalues held by the handle (0 for null).
 *
 * # Safety
 * `s` must be null or a live handle from [`fs_spectrum_new`].
 */
uintptr_t fs_spectrum_len(const struct FsSpectrum *s);

/**
 * λ_n, 1-based.
 *
 * # Safety
 * `s` must be null or a live handle; `out` null or writable.
 */
int32_t fs_spectrum_eigenvalue(const struct FsSpectrum *s, uintptr_t n, double *out);

/**
 * φ_n(x), 1-based, x in [0,1].
 *
 * # Safety
 * `s` must be null or a live handle; `out` null or writable.
 */
int32_t fs_spectrum_eigenfunction(const struct FsSpectrum *s, uintptr_t n, double x, double *out);

/**
 * # Safety
 * `s` must be null or a handle from [`fs_spectrum_new`] not yet freed.
 */
void fs_spectrum_free(struct FsSpectrum *s);

/**
 * Draws `count` paths on the `grid_len` times in `grid`.
 *
 * # Safety
 * `grid` must point to `grid_len` readable doubles; `out` null or writable.
 */
int32_t fs_sample_new(double h,
                      uintptr_t n_modes,
                      const double *grid,
                      uintptr_t grid_len,
                      uintptr_t count,
                      uint64_t seed,
                      struct FsSample **out);

/**
 * Number of paths (0 for null).
 *
 * # Safety
 * `s` must be null or a live handle from [`fs_sample_new`].
 */
uintptr_t fs_sample_count(const struct FsSample *s);

/**
 * Copies path `i` (0-based) into `buf`, which holds `len` doubles.
 *
 * # Safety
 * `s` must be null or a live handle; `buf` null or writable for `len` doubles.
 */
int32_t fs_sample_path(const struct FsSample *s, uintptr_t i, double *buf, uintptr_t len);

/**
 * # Safety
 * `s` must be null or a handle from [`fs_sample_new`] not yet freed.
 */
void fs_sample_free(struct FsSample *s);

/**
 * β(H), γ(H) of the small-ball asymptotics.
 *
 * # Safety
 * `beta` and `gamma` must be null or writable.
 */
int32_t fs_small_ball_constants(double h, double *beta, double *gamma);

/**
 * Steady-state filtering error P_∞(H, a).
 *
 * # Safety
 * `out` must be null or writable.
 */
int32_t fs_p_inf(double h, double a, double *out);

/**
 * P_T for each of the `len` horizons in `t`, written to `out`.
 *
 * # Safety
 * `t` must be readable and `out` writable for `len` doubles.
 */
int32_t fs_filtering_error(double h, double a, const double *t, uintptr_t len, double *out);

/**
 * ‖u_ε − u₀‖₂ and u_ε(1) for εu + K̃u = 1, 1/2 < H < 1.
 *
 * # Safety
 * `l2_error` and `endpoint` must be null or writable.
 */
int32_t fs_perturbed(double h, double eps, double *l2_error, double *endpoint);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FRACSPEC_H */
