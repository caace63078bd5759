#ifndef PSD_H
#define PSD_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum PsdStatus {
  PSD_STATUS_OK = 0,
  PSD_STATUS_NULL_POINTER = 1,
  PSD_STATUS_INVALID_ARGUMENT = 2,
  PSD_STATUS_DIMENSION_MISMATCH = 3,
  PSD_STATUS_UNSUPPORTED = 4,
  PSD_STATUS_EMPTY_MASS = 5,
  PSD_STATUS_UNBOUNDED_DOMAIN = 6,
  PSD_STATUS_RESOURCE_LIMIT = 7,
  PSD_STATUS_ILL_CONDITIONED = 8,
  PSD_STATUS_DEGENERATE_MODEL = 9,
  PSD_STATUS_CONTRACT_VIOLATION = 10,
  PSD_STATUS_INVALID_UTF8 = 11,
  PSD_STATUS_INTERNAL = 12,
  /**
   * A Rust panic was caught at the boundary.
   */
  PSD_STATUS_PANIC = 13,
} PsdStatus;

/**
 * Distance targeted by `psd_adaptive_rho`.
 */
typedef enum PsdMetric {
  PSD_METRIC_TOTAL_VARIATION = 0,
  PSD_METRIC_HELLINGER = 1,
} PsdMetric;

/**
 * Opaque model handle.
 */
typedef struct PsdModel PsdModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Builds a model from `a` (`m x m`, row-major, PSD), `centers` (`m x dim`) and `eta` (`dim`).
 * The new handle is written to `*out` and must be released with `psd_model_free`.
 */
enum PsdStatus psd_model_new(const double *a,
                             const double *centers,
                             const double *eta,
                             size_t m,
                             size_t dim,
                             struct PsdModel **out);

/**
 * Builds the rank-one model `(sum_i a_i k(x, x_i))^2` from `a` (`m`), `centers` and `eta`.
 */
enum PsdStatus psd_model_new_rank_one(const double *a,
                                      const double *centers,
                                      const double *eta,
                                      size_t m,
                                      size_t dim,
                                      struct PsdModel **out);

/**
 * Parses a model from its JSON form (NUL-terminated UTF-8).
 */
enum PsdStatus psd_model_from_json(const char *json, struct PsdModel **out);

/**
 * Writes a newly allocated JSON string to `*out`; free it with `psd_string_free`.
 */
enum PsdStatus psd_model_to_json(const struct PsdModel *model, char **out);

/**
 * Releases a string returned by this library. Null is ignored.
 */
void psd_string_free(char *s);

/**
 * Releases a model handle. Null is ignored.
 */
void psd_model_free(struct PsdModel *model);

enum PsdStatus psd_model_dim(const struct PsdModel *model, size_t *out);

enum PsdStatus psd_model_num_centers(const struct PsdModel *model, size_t *out);

/**
 * `f(x)` at the point `x` of length `dim`.
 */
enum PsdStatus psd_model_evaluate(const struct PsdModel *model,
                                  const double *x,
                                  size_t dim,
                                  double *out);

/**
 * Integral of the model over the box `[lower, upper]`. Infinite bounds are allowed.
 */
enum PsdStatus psd_model_integrate(const struct PsdModel *model,
                                   const double *lower,
                                   const double *upper,
                                   size_t dim,
                                   double *out);

/**
 * Integral of the model over the whole space.
 */
enum PsdStatus psd_model_total_mass(const struct PsdModel *model, double *out);

/**
 * Draws `n` samples on the bounded box `[lower, upper]` at resolution `rho` into
 * `samples` (`n x dim`, row-major). `integral_evals` may be null.
 */
enum PsdStatus psd_model_sample(const struct PsdModel *model,
                                const double *lower,
                                const double *upper,
                                size_t dim,
                                double rho,
                                size_t n,
                                uint64_t seed,
                                double *samples,
                                uint64_t *integral_evals);

/**
 * Resolution guaranteeing distance `eps` between the model on the box and its
 * dyadic approximation.
 */
enum PsdStatus psd_adaptive_rho(const struct PsdModel *model,
                                const double *lower,
                                const double *upper,
                                size_t dim,
                                double eps,
                                enum PsdMetric metric,
                                double *out);

/**
 * A bounded box holding all but a fraction `eps` of the model's mass, written to
 * `lower` and `upper` (length `dim` of the model each).
 */
enum PsdStatus psd_find_support(const struct PsdModel *model,
                                double eps,
                                double *lower,
                                double *upper);

/**
 * Message of the last failed call on this thread, or an empty string. The pointer
 * stays valid until the next call into this library from the same thread.
 */
const char *psd_last_error_message(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PSD_H */
