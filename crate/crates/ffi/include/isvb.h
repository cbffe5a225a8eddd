#ifndef ISVB_H
#define ISVB_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

#define ISVB_PRIOR_IMPROPER 0

#define ISVB_PRIOR_GAUSSIAN 1

#define ISVB_PRIOR_LAPLACE 2

typedef enum IsvbStatus {
  ISVB_STATUS_OK = 0,
  ISVB_STATUS_NULL_POINTER = 1,
  ISVB_STATUS_INVALID_ARGUMENT = 2,
  ISVB_STATUS_DATA_ERROR = 3,
  ISVB_STATUS_NUMERICAL_ERROR = 4,
  ISVB_STATUS_UNSUPPORTED = 5,
  ISVB_STATUS_PANIC = 6,
} IsvbStatus;

/**
 * A fitted model.
 */
typedef struct IsvbModel IsvbModel;

/**
 * A credible interval or ellipsoid.
 */
typedef struct IsvbRegion IsvbRegion;

/**
 * Options for [`isvb_fit`]. Start from [`isvb_fit_options_default`].
 */
typedef struct IsvbFitOptions {
  /**
   * One of the `ISVB_PRIOR_*` constants.
   */
  uint32_t prior;
  /**
   * Scale of the Gaussian or Laplace target prior; ignored for improper.
   */
  double sigma_n;
  /**
   * Known noise variance; zero or negative estimates it.
   */
  double noise_var;
  /**
   * Prior inclusion probability; zero or negative uses the default.
   */
  double inclusion;
  bool use_vb_mean;
  uint64_t seed;
} IsvbFitOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * Valid until the next call into this library on the same thread.
 */
const char *isvb_last_error(void);

const char *isvb_version(void);

struct IsvbFitOptions isvb_fit_options_default(void);

/**
 * Fits I-SVB. `x` is `n × p` row-major, `targets` holds `k` distinct 0-based
 * column indices. On success `*out` owns a new model.
 *
 * # Safety
 * `x` must point to `n * p` doubles, `y` to `n`, `targets` to `k` and
 * `options` and `out` must be valid for reads and writes respectively.
 */
enum IsvbStatus isvb_fit(const double *x,
                         size_t n,
                         size_t p,
                         const double *y,
                         const size_t *targets,
                         size_t k,
                         const struct IsvbFitOptions *options,
                         struct IsvbModel **out);

/**
 * Loads a model from its JSON form.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` valid for writes.
 */
enum IsvbStatus isvb_model_from_json(const char *json, struct IsvbModel **out);

/**
 * Serializes a model; free the string with [`isvb_string_free`].
 *
 * # Safety
 * `model` must come from this library and `out` be valid for writes.
 */
enum IsvbStatus isvb_model_to_json(const struct IsvbModel *model, char **out);

/**
 * Number of target coordinates.
 *
 * # Safety
 * `model` must come from this library; `k` must be valid for writes.
 */
enum IsvbStatus isvb_model_k(const struct IsvbModel *model, size_t *k);

/**
 * Noise variance the model was fitted with.
 *
 * # Safety
 * `model` must come from this library; `sigma2` must be valid for writes.
 */
enum IsvbStatus isvb_model_sigma2(const struct IsvbModel *model, double *sigma2);

/**
 * Writes `n_samples × k` draws of the targets, row-major, into `out`, which
 * must hold `out_len >= n_samples * k` doubles.
 *
 * # Safety
 * `model` must come from this library and `out` point to `out_len` writable doubles.
 */
enum IsvbStatus isvb_model_sample(const struct IsvbModel *model,
                                  size_t n_samples,
                                  uint64_t seed,
                                  double *out,
                                  size_t out_len);

/**
 * # Safety
 * `model` must be null or come from this library and not be used afterwards.
 */
void isvb_model_free(struct IsvbModel *model);

/**
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void isvb_string_free(char *s);

/**
 * Credible region from `n_samples × k` row-major draws: an interval when
 * `k` is 1, an ellipsoid otherwise.
 *
 * # Safety
 * `samples` must point to `n_samples * k` doubles and `out` be valid for writes.
 */
enum IsvbStatus isvb_region_from_samples(const double *samples,
                                         size_t n_samples,
                                         size_t k,
                                         double level,
                                         struct IsvbRegion **out);

/**
 * # Safety
 * `region` must come from this library, `point` hold `k` doubles and
 * `inside` be valid for writes.
 */
enum IsvbStatus isvb_region_contains(const struct IsvbRegion *region,
                                     const double *point,
                                     size_t k,
                                     bool *inside);

/**
 * Interval length or ellipsoid volume proxy.
 *
 * # Safety
 * `region` must come from this library and `size` be valid for writes.
 */
enum IsvbStatus isvb_region_size(const struct IsvbRegion *region, double *size);

/**
 * # Safety
 * `region` must be null or come from this library and not be used afterwards.
 */
void isvb_region_free(struct IsvbRegion *region);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ISVB_H */
