#ifndef DUNKL_LAB_H
#define DUNKL_LAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

/*
 Result codes. Zero is success.
 */
typedef enum DlStatus {
  DL_STATUS_OK = 0,
  DL_STATUS_NULL_POINTER = 1,
  DL_STATUS_INVALID_ARGUMENT = 2,
  DL_STATUS_INVALID_SPEC = 3,
  DL_STATUS_ACCURACY = 4,
  DL_STATUS_CAPABILITY = 5,
  DL_STATUS_PANIC = 6,
  DL_STATUS_OTHER = 7,
} DlStatus;

/*
 A root system with its reflection group, weight and grids.
 */
typedef struct DlContext DlContext;

/*
 A prepared semigroup kernel for one (ζ, ℓ, ε, t).
 */
typedef struct DlKernel DlKernel;

/*
 Library version as a static NUL-terminated string.
 */
const char *dl_version(void);

/*
 Copies the last error message of this thread into `buf` (NUL-terminated,
 truncated to `len`). Returns the full message length without the NUL.

 # Safety
 `buf` must be null or point to `len` writable bytes.
 */
size_t dl_last_error_message(char *buf, size_t len);

/*
 ℤ₂^N context with multiplicities `k[0..n]`; `n = 1` is the rank-one case.

 # Safety
 `k` must point to `n` doubles; `out` must be writable.
 */
enum DlStatus dl_context_new_product(const double *k, size_t n, struct DlContext **out);

/*
 Context from explicit roots: `roots` holds `n_roots × dimension` doubles
 row-major, `multiplicity` one value per root.

 # Safety
 Pointers must cover the stated sizes; `out` must be writable.
 */
enum DlStatus dl_context_new_explicit(size_t dimension,
                                      const double *roots,
                                      size_t n_roots,
                                      const double *multiplicity,
                                      struct DlContext **out);

/*
 # Safety
 `ctx` must be null or a handle from `dl_context_new_*` not yet freed.
 */
void dl_context_free(struct DlContext *ctx);

/*
 Dimension N, homogeneous dimension 𝐍, group order and c_k.

 # Safety
 `ctx` must be a live handle; output pointers must be writable or null.
 */
enum DlStatus dl_context_info(const struct DlContext *ctx,
                              size_t *dimension,
                              double *homogeneous_dimension,
                              size_t *group_order,
                              double *c_k);

/*
 E(iξ, x) for product systems, written to `re` and `im`.

 # Safety
 `xi` and `x` must point to `dimension` doubles; `re`, `im` writable.
 */
enum DlStatus dl_dunkl_kernel_imag(const struct DlContext *ctx,
                                   const double *xi,
                                   const double *x,
                                   size_t dimension,
                                   double *re,
                                   double *im);

/*
 Prepares q_t^{(ε)} for the ζ-set `directions` (`n_directions × N`
 doubles, row-major). `freq_nodes = 0` keeps the context default.

 # Safety
 `ctx` must be a live handle; `directions` must cover the stated size;
 `out` must be writable.
 */
enum DlStatus dl_kernel_new(const struct DlContext *ctx,
                            const double *directions,
                            size_t n_directions,
                            uint32_t ell,
                            double eps,
                            double t,
                            size_t freq_nodes,
                            struct DlKernel **out);

/*
 # Safety
 `kernel` must be null or a handle from `dl_kernel_new` not yet freed.
 */
void dl_kernel_free(struct DlKernel *kernel);

/*
 q_t(x) with its error estimate.

 # Safety
 `x` must point to `dimension` doubles; `value`, `error` writable.
 */
enum DlStatus dl_kernel_q(const struct DlKernel *kernel,
                          const double *x,
                          size_t dimension,
                          double *value,
                          double *error);

/*
 q_t(x, y) with its error estimate.

 # Safety
 `x` and `y` must point to `dimension` doubles; `value`, `error` writable.
 */
enum DlStatus dl_kernel_two_point(const struct DlKernel *kernel,
                                  const double *x,
                                  const double *y,
                                  size_t dimension,
                                  double *value,
                                  double *error);

#endif  /* DUNKL_LAB_H */
