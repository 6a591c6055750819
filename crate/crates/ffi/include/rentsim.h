#ifndef RENTSIM_H
#define RENTSIM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>
#include <stdbool.h>

typedef enum RentsimCalibratorKind {
  RENTSIM_CALIBRATOR_KIND_PLATT = 0,
  RENTSIM_CALIBRATOR_KIND_ISOTONIC = 1,
} RentsimCalibratorKind;

typedef enum RentsimPolicy {
  RENTSIM_POLICY_NON_TARGETING = 0,
  RENTSIM_POLICY_HPT = 1,
  RENTSIM_POLICY_TPT = 2,
} RentsimPolicy;

typedef enum RentsimStatus {
  RENTSIM_STATUS_OK = 0,
  RENTSIM_STATUS_NULL_POINTER = 1,
  RENTSIM_STATUS_INVALID_ARGUMENT = 2,
  // A quantity is undefined for the input, e.g. the Gini index of all zeros.
  RENTSIM_STATUS_UNDEFINED = 3,
  RENTSIM_STATUS_DEGENERATE_FIT = 4,
  RENTSIM_STATUS_DATA = 5,
  RENTSIM_STATUS_IO = 6,
  RENTSIM_STATUS_BUFFER_TOO_SMALL = 7,
  RENTSIM_STATUS_PANIC = 8,
} RentsimStatus;

// A fitted score-to-probability map.
typedef struct RentsimCalibrator RentsimCalibrator;

// A city: properties ranked by risk, grouped into neighborhoods.
typedef struct RentsimCity RentsimCity;

// Expected discoveries of the non-targeting walk (`s_b`) and a targeting
// policy (`s_t`) at the same budget. `rent` is NaN and `rent_defined` is
// false when `s_t` is zero.
typedef struct RentsimRent {
  double budget;
  double s_b;
  double s_t;
  double rent;
  bool rent_defined;
} RentsimRent;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failure on this thread. The pointer stays valid
// until the next failing call on the same thread; empty if none.
const char *rentsim_last_error(void);

// Library version as a static NUL-terminated string.
const char *rentsim_version(void);

// Kendall tau distance between two rankings of `1..=n`.
//
// # Safety
// `a` and `b` must point to `n` readable values; `out` must be writable.
enum RentsimStatus rentsim_kendall_tau(const size_t *a, const size_t *b, size_t n, uint64_t *out);

// Spearman footrule distance between two rankings of `1..=n`.
//
// # Safety
// As for [`rentsim_kendall_tau`].
enum RentsimStatus rentsim_spearman_footrule(const size_t *a,
                                             const size_t *b,
                                             size_t n,
                                             uint64_t *out);

// Kendall Mallows normalizer `Z(n, phi)`.
//
// # Safety
// `out` must be writable.
enum RentsimStatus rentsim_mallows_normalizer(size_t n, double phi, double *out);

// Footrule Mallows normalizer by enumeration; `n` is at most 8.
//
// # Safety
// `out` must be writable.
enum RentsimStatus rentsim_footrule_normalizer(size_t n, double phi, double *out);

// Draws one Kendall Mallows ranking around `center` by repeated insertion.
// The same `seed` always yields the same ranking.
//
// # Safety
// `center` must hold `n` values and `out` must have room for `n`.
enum RentsimStatus rentsim_sample_mallows(const size_t *center,
                                          size_t n,
                                          double phi,
                                          uint64_t seed,
                                          size_t *out);

// Pool-adjacent-violators fit of `values` with positive `weights`.
//
// # Safety
// `values` and `weights` must hold `n` values; `out` must have room for `n`.
enum RentsimStatus rentsim_pav(const double *values, const double *weights, size_t n, double *out);

// Samples a city of `neighborhoods` equal neighborhoods around the
// homogeneous central ranking.
//
// # Safety
// `out` must be writable; on success it receives a handle owned by the caller.
enum RentsimStatus rentsim_city_sample(size_t neighborhoods,
                                       size_t properties_per,
                                       double high_risk_fraction,
                                       double phi,
                                       uint64_t seed,
                                       struct RentsimCity **out);

// Builds a city from an explicit ranking: the first `sizes[0]` slots form
// neighborhood 0, the next `sizes[1]` neighborhood 1, and so on.
//
// # Safety
// `ranking_items` must hold `n` values, `sizes` `num_sizes` values, and
// `out` must be writable.
enum RentsimStatus rentsim_city_from_ranking(const size_t *ranking_items,
                                             size_t n,
                                             const size_t *sizes,
                                             size_t num_sizes,
                                             double high_risk_fraction,
                                             struct RentsimCity **out);

// Releases a city; null is ignored.
//
// # Safety
// `city` must come from a `rentsim_city_*` constructor and not be used again.
void rentsim_city_free(struct RentsimCity *city);

// # Safety
// `city` must be a live handle and `out` writable.
enum RentsimStatus rentsim_city_num_neighborhoods(const struct RentsimCity *city, size_t *out);

// # Safety
// `city` must be a live handle and `out` writable.
enum RentsimStatus rentsim_city_total_properties(const struct RentsimCity *city, size_t *out);

// Copies the High-Risk count of each neighborhood into `out`, which must
// have room for `len >= num_neighborhoods` values.
//
// # Safety
// `city` must be a live handle and `out` must have room for `len` values.
enum RentsimStatus rentsim_city_high_risk_counts(const struct RentsimCity *city,
                                                 size_t *out,
                                                 size_t len);

// Gini index of the per-neighborhood High-Risk counts.
//
// # Safety
// `city` must be a live handle and `out` writable.
enum RentsimStatus rentsim_city_gini(const struct RentsimCity *city, double *out);

// RENT of `policy` against the non-targeting walk. The budget covers the
// first `m` neighborhoods in High-Risk-count order at inter-neighborhood
// cost `alpha`; High-Risk properties are evicted with probability `p`,
// the rest with `q`.
//
// # Safety
// `city` must be a live handle and `out` writable.
enum RentsimStatus rentsim_city_rent(const struct RentsimCity *city,
                                     size_t m,
                                     double alpha,
                                     enum RentsimPolicy policy,
                                     double p,
                                     double q,
                                     struct RentsimRent *out);

// Fits a calibrator to `n` scores and binary outcomes (nonzero is true).
//
// # Safety
// `scores` and `outcomes` must hold `n` values; `out` must be writable and
// receives a handle owned by the caller.
enum RentsimStatus rentsim_calibrator_fit(enum RentsimCalibratorKind kind,
                                          const double *scores,
                                          const uint8_t *outcomes,
                                          size_t n,
                                          struct RentsimCalibrator **out);

// Parses a calibrator from the text written by [`rentsim_calibrator_to_text`].
//
// # Safety
// `text` must be a NUL-terminated string and `out` writable.
enum RentsimStatus rentsim_calibrator_from_text(const char *text, struct RentsimCalibrator **out);

// Releases a calibrator; null is ignored.
//
// # Safety
// `calibrator` must come from a `rentsim_calibrator_*` constructor and not
// be used again.
void rentsim_calibrator_free(struct RentsimCalibrator *calibrator);

// Maps `n` scores to probabilities.
//
// # Safety
// `calibrator` must be a live handle, `scores` must hold `n` values and
// `out` must have room for `n`.
enum RentsimStatus rentsim_calibrator_apply(const struct RentsimCalibrator *calibrator,
                                            const double *scores,
                                            size_t n,
                                            double *out);

// Serializes a calibrator. The string is owned by the caller and must be
// released with [`rentsim_string_free`].
//
// # Safety
// `calibrator` must be a live handle and `out` writable.
enum RentsimStatus rentsim_calibrator_to_text(const struct RentsimCalibrator *calibrator,
                                              char **out);

// Releases a string returned by this library; null is ignored.
//
// # Safety
// `s` must come from this library and not be used again.
void rentsim_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RENTSIM_H */
