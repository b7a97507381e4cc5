#ifndef GROUPGATE_H
#define GROUPGATE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum GgStatus {
  GG_STATUS_OK = 0,
  GG_STATUS_NULL_POINTER = 1,
  GG_STATUS_IO = 2,
  GG_STATUS_FORMAT = 3,
  GG_STATUS_DIMENSION = 4,
  GG_STATUS_INVALID_ARGUMENT = 5,
  GG_STATUS_UNSUPPORTED = 6,
  GG_STATUS_PANIC = 7,
  GG_STATUS_OTHER = 8,
} GgStatus;

typedef enum GgSplit {
  GG_SPLIT_TRAIN = 0,
  GG_SPLIT_VALID = 1,
  GG_SPLIT_TEST = 2,
} GgSplit;

/**
 * Opaque dataset.
 */
typedef struct GgDataset GgDataset;

/**
 * Opaque trained model.
 */
typedef struct GgModel GgModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *gg_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *gg_version(void);

/**
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum GgStatus gg_model_load(const char *path, struct GgModel **out);

/**
 * # Safety
 * `model` must be a live handle; `path` a NUL-terminated string.
 */
enum GgStatus gg_model_save(const struct GgModel *model, const char *path);

/**
 * Releases a model; null is ignored.
 *
 * # Safety
 * `model` must come from this library and not be used afterwards.
 */
void gg_model_free(struct GgModel *model);

/**
 * # Safety
 * `model` must be a live handle; non-null outputs must be writable.
 */
enum GgStatus gg_model_dims(const struct GgModel *model,
                            size_t *input_dim,
                            size_t *output_dim,
                            size_t *hidden);

/**
 * Mapping-unit probabilities for `n` pairs: `x` is `n × input_dim`, `y` is
 * `n × output_dim`, `out` receives `n × hidden`.
 *
 * # Safety
 * Buffers must hold the stated number of doubles.
 */
enum GgStatus gg_model_infer(const struct GgModel *model,
                             const double *x,
                             const double *y,
                             size_t n,
                             double *out);

/**
 * Output-image reconstruction `ŷ` from `x` and mapping units `h` (gated
 * models only): `x` is `n × input_dim`, `h` is `n × hidden`, `out` receives
 * `n × output_dim`.
 *
 * # Safety
 * Buffers must hold the stated number of doubles.
 */
enum GgStatus gg_model_reconstruct_y(const struct GgModel *model,
                                     const double *x,
                                     const double *h,
                                     size_t n,
                                     double *out);

/**
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum GgStatus gg_dataset_load(const char *path, struct GgDataset **out);

/**
 * Generates a synthetic dataset from a JSON dataset spec, e.g.
 * `{"task":{"kind":"rotation"},"patch_size":13,"counts":{"train":100,"valid":10,"test":10},"seed":1}`.
 *
 * # Safety
 * `spec_json` must be a NUL-terminated string; `out` must be writable.
 */
enum GgStatus gg_dataset_generate(const char *spec_json,
                                  struct GgDataset **out);

/**
 * # Safety
 * `dataset` must be a live handle; `path` a NUL-terminated string.
 */
enum GgStatus gg_dataset_save(const struct GgDataset *dataset, const char *path);

/**
 * Releases a dataset; null is ignored.
 *
 * # Safety
 * `dataset` must come from this library and not be used afterwards.
 */
void gg_dataset_free(struct GgDataset *dataset);

/**
 * Number of pairs in a split and the length of each image vector.
 *
 * # Safety
 * `dataset` must be a live handle; non-null outputs must be writable.
 */
enum GgStatus gg_dataset_shape(const struct GgDataset *dataset,
                               enum GgSplit which,
                               size_t *len,
                               size_t *dim);

/**
 * Copies pair `index` of a split into `x` and `y` (`dim` doubles each);
 * `label` receives the class or -1 for unlabeled data.
 *
 * # Safety
 * `x` and `y` must hold `dim` doubles; `label` may be null.
 */
enum GgStatus gg_dataset_pair(const struct GgDataset *dataset,
                              enum GgSplit which,
                              size_t index,
                              double *x,
                              double *y,
                              int32_t *label);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GROUPGATE_H */
