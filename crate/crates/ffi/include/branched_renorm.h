#ifndef BRANCHED_RENORM_H
#define BRANCHED_RENORM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes of every fallible entry point.
 */
typedef enum BrnStatus {
  BRN_STATUS_OK = 0,
  BRN_STATUS_NULL_POINTER = 1,
  BRN_STATUS_INVALID_UTF8 = 2,
  BRN_STATUS_PARSE = 3,
  BRN_STATUS_LOCALITY = 4,
  BRN_STATUS_NUMERIC = 5,
  BRN_STATUS_INVALID_ARGUMENT = 6,
  BRN_STATUS_PANIC = 7,
} BrnStatus;

/**
 * A decorated forest together with its inner product.
 */
typedef struct BrnForest BrnForest;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parses forest text. `explicit_mode` selects vector decorations with a `Q=`
 * header; otherwise the format is detected from the text.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum BrnStatus brn_forest_parse(const char *text, bool explicit_mode, struct BrnForest **out);

/**
 * Releases a forest. Null is accepted.
 *
 * # Safety
 * `forest` must come from this library and not be used afterwards.
 */
void brn_forest_free(struct BrnForest *forest);

/**
 * Number of vertices, or 0 for a null handle.
 *
 * # Safety
 * `forest` must be null or a live handle.
 */
size_t brn_forest_degree(const struct BrnForest *forest);

/**
 * Weight text of a forest whose decorations are orthogonal basis directions.
 *
 * # Safety
 * `forest` must be a live handle and `out` a valid pointer.
 */
enum BrnStatus brn_forest_serialize(const struct BrnForest *forest, char **out);

/**
 * Product of two forests placed on disjoint coordinates, so that they are
 * automatically independent.
 *
 * # Safety
 * `a`, `b` must be live handles and `out` a valid pointer.
 */
enum BrnStatus brn_forest_concat(const struct BrnForest *a,
                                 const struct BrnForest *b,
                                 struct BrnForest **out);

/**
 * Renormalized value. `trunc = 0` selects the default truncation. On success
 * `out_exact` receives the exact polynomial in `pi^2` (release with
 * [`brn_string_free`]) and `out_value` its numeric value; either may be null.
 *
 * # Safety
 * `forest` must be a live handle; outputs must be null or valid.
 */
enum BrnStatus brn_renormalize(const struct BrnForest *forest,
                               uint32_t trunc,
                               char **out_exact,
                               double *out_value);

/**
 * Closed form of the regularized integral as text.
 *
 * # Safety
 * `forest` must be a live handle and `out` a valid pointer.
 */
enum BrnStatus brn_regularize(const struct BrnForest *forest, char **out);

/**
 * Whether two forests are similar (same shape, proportional weights).
 *
 * # Safety
 * `a`, `b` must be live handles and `out` a valid pointer.
 */
enum BrnStatus brn_is_similar(const struct BrnForest *a, const struct BrnForest *b, bool *out);

/**
 * Largest relative deviation between nested quadrature and the closed form
 * over `samples` random admissible assignments at `x = 1`.
 *
 * # Safety
 * `forest` must be a live handle and `out` a valid pointer.
 */
enum BrnStatus brn_quad_check(const struct BrnForest *forest,
                              uint32_t samples,
                              uint64_t seed,
                              double *out);

/**
 * Releases a string returned by this library. Null is accepted.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void brn_string_free(char *s);

/**
 * Message of the last failure on this thread, or null. The pointer stays
 * valid until the next library call on the same thread.
 */
const char *brn_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *brn_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BRANCHED_RENORM_H */
