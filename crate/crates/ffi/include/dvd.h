/* C interface to the developmental visual diet library. */

#ifndef DVD_H
#define DVD_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum DvdStatus {
  DVD_STATUS_OK = 0,
  DVD_STATUS_NULL_POINTER = 1,
  DVD_STATUS_INVALID_CONFIG = 2,
  DVD_STATUS_INVALID_ARGUMENT = 3,
  DVD_STATUS_SHAPE_MISMATCH = 4,
  DVD_STATUS_NUMERICAL_INTEGRITY = 5,
  DVD_STATUS_IO = 6,
  DVD_STATUS_PANIC = 7,
  DVD_STATUS_INTERNAL = 8,
} DvdStatus;

/**
 * Opaque engine handle.
 */
typedef struct DvdHandle DvdHandle;

/**
 * Library-allocated `float` array.
 */
typedef struct DvdBuffer {
  float *data;
  size_t len;
} DvdBuffer;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Creates a handle from a JSON config and optional JSON anchor document.
 * NULL `config_json` selects the default config; NULL `anchors_json` the
 * built-in schedules.
 *
 * # Safety
 * String arguments must be NULL or NUL-terminated; `out` must be writable.
 */
enum DvdStatus dvd_handle_new(const char *config_json,
                              const char *anchors_json,
                              struct DvdHandle **out);

/**
 * Creates a handle from a JSON config file with the built-in schedules.
 *
 * # Safety
 * `path` must be NUL-terminated; `out` must be writable.
 */
enum DvdStatus dvd_handle_new_from_file(const char *path, struct DvdHandle **out);

/**
 * Releases a handle. NULL is ignored.
 *
 * # Safety
 * `handle` must come from a `dvd_handle_new*` call and not be used afterwards.
 */
void dvd_handle_free(struct DvdHandle *handle);

/**
 * Hex SHA-256 fingerprint of the handle's config and schedules; owned by
 * the handle. NULL for a NULL handle.
 *
 * # Safety
 * `handle` must be NULL or live.
 */
const char *dvd_handle_fingerprint(const struct DvdHandle *handle);

/**
 * Message for the last failed call on this thread, or NULL. Valid until the
 * next call into the library from the same thread.
 */
const char *dvd_last_error_message(void);

/**
 * Library version, static.
 */
const char *dvd_version(void);

/**
 * Releases a buffer's storage and zeroes it. NULL is ignored.
 *
 * # Safety
 * `buffer` must be NULL or a buffer filled by this library.
 */
void dvd_buffer_free(struct DvdBuffer *buffer);

/**
 * Applies the diet at `age_months` to each of `n` images of `height×width×3`.
 *
 * # Safety
 * `images` must hold `n·height·width·3` floats; `out` must be writable.
 */
enum DvdStatus dvd_transform_batch(const struct DvdHandle *handle,
                                   const float *images,
                                   size_t n,
                                   size_t height,
                                   size_t width,
                                   double age_months,
                                   struct DvdBuffer *out);

/**
 * Applies one corruption to each image. `image_ids` keys the noise; NULL
 * uses the decimal batch index, otherwise it must hold `n` strings.
 *
 * # Safety
 * As [`dvd_transform_batch`]; `kind` must be NUL-terminated.
 */
enum DvdStatus dvd_corrupt_batch(const float *images,
                                 size_t n,
                                 size_t height,
                                 size_t width,
                                 const char *kind,
                                 uint8_t severity,
                                 uint64_t seed,
                                 const char *const *image_ids,
                                 struct DvdBuffer *out);

/**
 * Applies one black-box noise attack to each image. `image_ids` as in
 * [`dvd_corrupt_batch`].
 *
 * # Safety
 * As [`dvd_corrupt_batch`].
 */
enum DvdStatus dvd_perturb_batch(const float *images,
                                 size_t n,
                                 size_t height,
                                 size_t width,
                                 const char *attack,
                                 uint32_t amplitude,
                                 uint64_t seed,
                                 const char *const *image_ids,
                                 struct DvdBuffer *out);

/**
 * Acuity as MAR (1 = 20/20) at `age_months`.
 *
 * # Safety
 * `handle` must be live; `out` writable.
 */
enum DvdStatus dvd_acuity_at(const struct DvdHandle *handle, double age_months, double *out);

/**
 * Contrast sensitivity in `[0, 1]` at `age_months`.
 *
 * # Safety
 * `handle` must be live; `out` writable.
 */
enum DvdStatus dvd_contrast_sensitivity_at(const struct DvdHandle *handle,
                                           double age_months,
                                           double *out);

/**
 * Chromatic sensitivity in `[0, 1]` at `age_months`.
 *
 * # Safety
 * `handle` must be live; `out` writable.
 */
enum DvdStatus dvd_chromatic_sensitivity_at(const struct DvdHandle *handle,
                                            double age_months,
                                            double *out);

/**
 * Age in months for a training epoch under the handle's `alpha`.
 *
 * # Safety
 * `handle` must be live; `out` writable.
 */
enum DvdStatus dvd_epoch_to_age(const struct DvdHandle *handle, uint64_t epoch, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DVD_H */
