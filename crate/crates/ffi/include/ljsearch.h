#ifndef LJSEARCH_H
#define LJSEARCH_H

/* Generated by cbindgen from the ljsearch-ffi crate. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum LjsClass {
  LJS_CLASS_N1_IC = 0,
  LJS_CLASS_N1_IR = 1,
  LJS_CLASS_N0_IC = 2,
  LJS_CLASS_N3 = 3,
  LJS_CLASS_N4 = 4,
  LJS_CLASS_N5 = 5,
  LJS_CLASS_N6 = 6,
  LJS_CLASS_N7 = 7,
  LJS_CLASS_UNCLASSIFIED = 8,
} LjsClass;

typedef enum LjsLattice {
  LJS_LATTICE_CB = 0,
  LJS_LATTICE_IC = 1,
  LJS_LATTICE_FC = 2,
  LJS_LATTICE_IF = 3,
} LjsLattice;

/**
 * Result code of every fallible call.
 */
typedef enum LjsStatus {
  LJS_STATUS_OK = 0,
  LJS_STATUS_NULL_POINTER = 1,
  LJS_STATUS_INVALID_ARGUMENT = 2,
  LJS_STATUS_BUFFER_TOO_SMALL = 3,
  LJS_STATUS_COINCIDENT = 4,
  LJS_STATUS_NUMERICAL = 5,
  LJS_STATUS_INSUFFICIENT_REGION = 6,
  LJS_STATUS_EMPTY_REGION = 7,
  LJS_STATUS_SEARCH_FAILED = 8,
  LJS_STATUS_OVERFLOW = 9,
  LJS_STATUS_IO = 10,
  LJS_STATUS_PANIC = 11,
} LjsStatus;

/**
 * Opaque particle configuration.
 */
typedef struct LjsConfiguration LjsConfiguration;

/**
 * Opaque enumerated lattice region.
 */
typedef struct LjsRegion LjsRegion;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty when none. The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *ljs_last_error(void);

/**
 * Creates a configuration from `n` particles (`3n` doubles).
 *
 * # Safety
 * `coords` must point to `3n` readable doubles and `out` must be writable.
 */
enum LjsStatus ljs_configuration_new(const double *coords, size_t n, struct LjsConfiguration **out);

/**
 * # Safety
 * `c` must come from this library and not have been freed; null is ignored.
 */
void ljs_configuration_free(struct LjsConfiguration *c);

/**
 * Number of particles; 0 for a null handle.
 *
 * # Safety
 * `c` must be null or a live handle.
 */
size_t ljs_configuration_len(const struct LjsConfiguration *c);

/**
 * Copies the coordinates into `out`, which must hold `3 * len` doubles.
 *
 * # Safety
 * `c` must be a live handle and `out` must hold `cap` writable doubles.
 */
enum LjsStatus ljs_configuration_coords(const struct LjsConfiguration *c, double *out, size_t cap);

/**
 * # Safety
 * `c` must be a live handle and `energy` writable.
 */
enum LjsStatus ljs_energy(const struct LjsConfiguration *c, double *energy);

/**
 * # Safety
 * `c` must be a live handle and `out` must hold `cap` writable doubles.
 */
enum LjsStatus ljs_gradient(const struct LjsConfiguration *c, double *out, size_t cap);

/**
 * Local minimization. `grad_tol <= 0` or `max_iters == 0` select the
 * defaults. The minimized configuration is a new handle.
 *
 * # Safety
 * `c` must be a live handle; `out` and `energy` writable.
 */
enum LjsStatus ljs_minimize(const struct LjsConfiguration *c,
                            double grad_tol,
                            size_t max_iters,
                            struct LjsConfiguration **out,
                            double *energy);

/**
 * # Safety
 * `c` must be a live handle and `class` writable.
 */
enum LjsStatus ljs_classify(const struct LjsConfiguration *c, enum LjsClass *class_);

/**
 * Static name such as `N1_IC`.
 */
const char *ljs_class_name(enum LjsClass class_);

/**
 * Generates a lattice region: `size` is the half-width for `Cb` and the
 * shell count otherwise.
 *
 * # Safety
 * `out` must be writable.
 */
enum LjsStatus ljs_region_generate(enum LjsLattice kind, uint32_t size, struct LjsRegion **out);

/**
 * Region from `n` arbitrary distinct points, numbered from the core out.
 *
 * # Safety
 * `coords` must point to `3n` readable doubles and `out` must be writable.
 */
enum LjsStatus ljs_region_from_points(const double *coords, size_t n, struct LjsRegion **out);

/**
 * # Safety
 * `r` must come from this library and not have been freed; null is ignored.
 */
void ljs_region_free(struct LjsRegion *r);

/**
 * Number of points; 0 for a null handle.
 *
 * # Safety
 * `r` must be null or a live handle.
 */
size_t ljs_region_len(const struct LjsRegion *r);

/**
 * Copies the points in id order (id 1 first).
 *
 * # Safety
 * `r` must be a live handle and `out` must hold `cap` writable doubles.
 */
enum LjsStatus ljs_region_points(const struct LjsRegion *r, double *out, size_t cap);

/**
 * Writes the 1-based region id matched to each particle into `ids`.
 *
 * # Safety
 * `c` and `r` must be live handles and `ids` must hold `cap` writable values.
 */
enum LjsStatus ljs_match(const struct LjsConfiguration *c,
                         const struct LjsRegion *r,
                         size_t *ids,
                         size_t cap);

/**
 * `C(m, n)`; `LJS_STATUS_OVERFLOW` when it does not fit in 64 bits.
 *
 * # Safety
 * `out` must be writable.
 */
enum LjsStatus ljs_count_combinations(uint64_t m, uint64_t n, uint64_t *out);

/**
 * Evolutionary search for an `n`-particle cluster. `regions` may be null
 * (with `n_regions == 0`) to use regions sized for `n`.
 *
 * # Safety
 * `regions` must point to `n_regions` live handles; `out` and `energy` writable.
 */
enum LjsStatus ljs_evolve(size_t n,
                          const struct LjsRegion *const *regions,
                          size_t n_regions,
                          uint64_t seed,
                          struct LjsConfiguration **out,
                          double *energy);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LJSEARCH_H */
