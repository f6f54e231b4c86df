#ifndef LOLAB_H
#define LOLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum LolabStatus {
  LOLAB_STATUS_OK = 0,
  LOLAB_STATUS_NULL_POINTER = 1,
  LOLAB_STATUS_INVALID_UTF8 = 2,
  LOLAB_STATUS_INVALID_INPUT = 3,
  LOLAB_STATUS_PRECONDITION_FAILED = 4,
  LOLAB_STATUS_BUDGET_EXCEEDED = 5,
  LOLAB_STATUS_FAILED = 6,
  LOLAB_STATUS_PANIC = 7,
} LolabStatus;

/**
 * Opaque integer GAP.
 */
typedef struct LolabGap LolabGap;

/**
 * Opaque step multiset.
 */
typedef struct LolabMultiset LolabMultiset;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version, a static NUL-terminated string.
 */
const char *lolab_version(void);

/**
 * Message for the last failed call on this thread; empty after a success.
 * Valid until the next library call on the same thread.
 */
const char *lolab_last_error(void);

/**
 * # Safety
 * `s` must come from this library and not have been freed. Null is ignored.
 */
void lolab_string_free(char *s);

/**
 * # Safety
 * `values` must point to `len` readable integers; `out` must be writable.
 */
enum LolabStatus lolab_multiset_new(const int64_t *values, size_t len, struct LolabMultiset **out);

/**
 * # Safety
 * `m` must come from [`lolab_multiset_new`] and not have been freed.
 */
void lolab_multiset_free(struct LolabMultiset *m);

/**
 * # Safety
 * `m` must be a live handle; `out` must be writable.
 */
enum LolabStatus lolab_multiset_len(const struct LolabMultiset *m, size_t *out);

/**
 * Exact `rho` as JSON `{"rho": "a/b", "argmax": x, "rho_decimal": f}`.
 * A null `eta_json` means Bernoulli steps.
 *
 * # Safety
 * `m` must be a live handle, `eta_json` null or a NUL-terminated string,
 * `out_json` writable. Free the result with [`lolab_string_free`].
 */
enum LolabStatus lolab_rho(const struct LolabMultiset *m, const char *eta_json, char **out_json);

/**
 * Runs the inverse pipeline with the pinned constants and returns the full
 * report as JSON.
 *
 * # Safety
 * `m` must be a live handle, `epsilon` a NUL-terminated rational such as
 * `"1/10"`, `out_json` writable. Free the result with [`lolab_string_free`].
 */
enum LolabStatus lolab_invert(const struct LolabMultiset *m,
                              const char *epsilon,
                              double c,
                              char **out_json);

/**
 * `{sum x_i g_i : |x_i| <= bounds_i}` in the integers.
 *
 * # Safety
 * `generators` and `bounds` must each point to `rank` readable integers;
 * `out` must be writable.
 */
enum LolabStatus lolab_gap_symmetric(const int64_t *generators,
                                     const int64_t *bounds,
                                     size_t rank,
                                     struct LolabGap **out);

/**
 * # Safety
 * `g` must come from [`lolab_gap_symmetric`] and not have been freed.
 */
void lolab_gap_free(struct LolabGap *g);

/**
 * Coefficient-box cardinality, saturating at `UINT64_MAX`.
 *
 * # Safety
 * `g` must be a live handle; `out` must be writable.
 */
enum LolabStatus lolab_gap_volume(const struct LolabGap *g, uint64_t *out);

/**
 * # Safety
 * `g` must be a live handle; `out` must be writable.
 */
enum LolabStatus lolab_gap_contains(const struct LolabGap *g, int64_t x, bool *out);

/**
 * # Safety
 * `g` must be a live handle; `out` must be writable.
 */
enum LolabStatus lolab_gap_is_proper(const struct LolabGap *g, bool *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LOLAB_H */
