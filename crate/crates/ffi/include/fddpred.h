/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef FDDPRED_H
#define FDDPRED_H

#include <stddef.h>
#include <stdint.h>

/**
 * Result of every fallible call.
 */
typedef enum FddStatus {
  FDD_STATUS_OK = 0,
  FDD_STATUS_NULL_POINTER = 1,
  FDD_STATUS_INVALID_ARGUMENT = 2,
  FDD_STATUS_IO = 3,
  FDD_STATUS_FORMAT = 4,
  FDD_STATUS_SHAPE = 5,
  FDD_STATUS_NUMERICAL = 6,
  FDD_STATUS_PANIC = 7,
} FddStatus;

/**
 * Opaque CSI dataset.
 */
typedef struct FddDataset FddDataset;

/**
 * Opaque trained network with its input/output adapter.
 */
typedef struct FddModel FddModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buf` (NUL-terminated,
 * truncated to `len`) and returns the full message length in bytes. An empty
 * message means the last call succeeded.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t fdd_last_error(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *fdd_version(void);

/**
 * Reads an FDDCSI01 file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum FddStatus fdd_dataset_load(const char *path, struct FddDataset **out);

/**
 * Generates `n` samples of the flat line-of-sight scenario (UE distance
 * uniform in 100..200 m, pathloss exponent `beta`).
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum FddStatus fdd_dataset_generate_los(double f_ul,
                                        double f_dl,
                                        double beta,
                                        size_t n,
                                        uint64_t seed,
                                        struct FddDataset **out);

/**
 * Writes `dataset` as an FDDCSI01 file.
 *
 * # Safety
 * `dataset` must be a live handle and `path` a NUL-terminated string.
 */
enum FddStatus fdd_dataset_save(const struct FddDataset *dataset, const char *path);

/**
 * Number of samples, or 0 for a null handle.
 *
 * # Safety
 * `dataset` must be null or a live handle.
 */
size_t fdd_dataset_len(const struct FddDataset *dataset);

/**
 * Antenna and subcarrier counts of every sample.
 *
 * # Safety
 * `dataset` must be a live handle; the outputs valid pointers.
 */
enum FddStatus fdd_dataset_dims(const struct FddDataset *dataset,
                                size_t *antennas,
                                size_t *subcarriers);

/**
 * Copies the uplink and downlink CSI of sample `index`. Either output may be
 * null; each non-null one receives `2 * antennas * subcarriers` doubles.
 *
 * # Safety
 * `dataset` must be a live handle; non-null outputs must have room for the
 * full matrix.
 */
enum FddStatus fdd_dataset_sample(const struct FddDataset *dataset,
                                  size_t index,
                                  double *h_ul,
                                  double *h_dl);

/**
 * Releases a dataset handle. Null is ignored.
 *
 * # Safety
 * `dataset` must be null or a handle not freed before.
 */
void fdd_dataset_free(struct FddDataset *dataset);

/**
 * Loads an FDDNN001 checkpoint together with its `<path>.json` sidecar.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum FddStatus fdd_model_load(const char *path, struct FddModel **out);

/**
 * Predicts downlink CSI for `count` uplink matrices of the given shape.
 * `h_ul` holds `count * 2 * antennas * subcarriers` doubles, and `h_dl`
 * receives the same amount.
 *
 * # Safety
 * `model` must be a live handle; the buffers must have the stated sizes.
 */
enum FddStatus fdd_model_predict(const struct FddModel *model,
                                 const double *h_ul,
                                 size_t count,
                                 size_t antennas,
                                 size_t subcarriers,
                                 double *h_dl);

/**
 * Releases a model handle. Null is ignored.
 *
 * # Safety
 * `model` must be null or a handle not freed before.
 */
void fdd_model_free(struct FddModel *model);

/**
 * Normalized squared error `|pred - truth|^2 / |truth|^2` over `len`
 * complex values.
 *
 * # Safety
 * Both inputs must hold `2 * len` doubles; `out` must be valid.
 */
enum FddStatus fdd_nmse(const double *pred, const double *truth, size_t len, double *out);

/**
 * Correlation coefficient `|<pred, truth>| / (|pred| |truth|)` over `len`
 * complex values.
 *
 * # Safety
 * Both inputs must hold `2 * len` doubles; `out` must be valid.
 */
enum FddStatus fdd_corr_coeff(const double *pred, const double *truth, size_t len, double *out);

/**
 * Free-space line-of-sight coefficient at `distance` metres and carrier
 * `f_c` Hz with pathloss exponent `beta`.
 *
 * # Safety
 * `re` and `im` must be valid pointers.
 */
enum FddStatus fdd_los_coefficient(double distance,
                                   double f_c,
                                   double beta,
                                   double *re,
                                   double *im);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FDDPRED_H */
