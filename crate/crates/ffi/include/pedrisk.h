#ifndef PEDRISK_H
#define PEDRISK_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PedriskStatus {
  PEDRISK_STATUS_OK = 0,
  PEDRISK_STATUS_NULL_POINTER = 1,
  PEDRISK_STATUS_INVALID_UTF8 = 2,
  PEDRISK_STATUS_IO = 3,
  PEDRISK_STATUS_PARSE = 4,
  PEDRISK_STATUS_INVALID_ARGUMENT = 5,
  PEDRISK_STATUS_MODEL = 6,
  PEDRISK_STATUS_EXPLAIN = 7,
  PEDRISK_STATUS_GEOMETRY = 8,
  PEDRISK_STATUS_PANIC = 9,
} PedriskStatus;

/**
 * District polygons sorted by id.
 */
typedef struct PedriskDistricts PedriskDistricts;

/**
 * A loaded model document.
 */
typedef struct PedriskModel PedriskModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *pedrisk_last_error(void);

/**
 * Loads a model JSON file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum PedriskStatus pedrisk_model_load(const char *path, struct PedriskModel **out);

/**
 * Parses a model from an in-memory JSON document.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum PedriskStatus pedrisk_model_from_json(const char *json, struct PedriskModel **out);

/**
 * # Safety
 * `model` must come from a `pedrisk_model_*` constructor or be null.
 */
void pedrisk_model_free(struct PedriskModel *model);

/**
 * Number of input columns the model expects, or 0 for a null handle.
 *
 * # Safety
 * `model` must be a live handle or null.
 */
size_t pedrisk_model_n_features(const struct PedriskModel *model);

/**
 * Positive-class probabilities for `n_rows` row-major rows of width `n_cols`.
 *
 * # Safety
 * `rows` must hold `n_rows * n_cols` doubles and `out` room for `n_rows`.
 */
enum PedriskStatus pedrisk_model_predict(const struct PedriskModel *model,
                                         const double *rows,
                                         size_t n_rows,
                                         size_t n_cols,
                                         double *out);

/**
 * Per-feature SHAP values for one row. `out_contrib` receives `n_cols`
 * values; `out_base` the expected value. `out_log_odds` (optional) is set to
 * 1 when attributions are on the log-odds scale and 0 for probability.
 *
 * # Safety
 * `row` must hold `n_cols` doubles, `out_contrib` room for `n_cols`.
 */
enum PedriskStatus pedrisk_model_shap(const struct PedriskModel *model,
                                      const double *row,
                                      size_t n_cols,
                                      double *out_contrib,
                                      double *out_base,
                                      int32_t *out_log_odds);

/**
 * ROC-AUC of `scores` against 0/1 `labels`, ties at midrank.
 *
 * # Safety
 * `labels` and `scores` must each hold `n` elements; `out` must be writable.
 */
enum PedriskStatus pedrisk_roc_auc(const uint8_t *labels,
                                   const double *scores,
                                   size_t n,
                                   double *out);

/**
 * Parses a GeoJSON FeatureCollection. Null property names fall back to
 * `district_id` and `name`.
 *
 * # Safety
 * String arguments must be NUL-terminated or null; `out` must be writable.
 */
enum PedriskStatus pedrisk_districts_from_geojson(const char *geojson,
                                                  const char *id_property,
                                                  const char *name_property,
                                                  struct PedriskDistricts **out);

/**
 * # Safety
 * `districts` must come from `pedrisk_districts_from_geojson` or be null.
 */
void pedrisk_districts_free(struct PedriskDistricts *districts);

/**
 * # Safety
 * `districts` must be a live handle or null.
 */
size_t pedrisk_districts_len(const struct PedriskDistricts *districts);

/**
 * Id of district `index`, owned by the handle. Null when out of range.
 *
 * # Safety
 * `districts` must be a live handle or null.
 */
const char *pedrisk_districts_id(const struct PedriskDistricts *districts, size_t index);

/**
 * Index of the first district (by id) containing the point, or -1.
 * Boundary points count as inside.
 *
 * # Safety
 * `districts` must be a live handle; `out_index` must be writable.
 */
enum PedriskStatus pedrisk_districts_locate(const struct PedriskDistricts *districts,
                                            double x,
                                            double y,
                                            int64_t *out_index);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PEDRISK_H */
