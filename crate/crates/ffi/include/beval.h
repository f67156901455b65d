#ifndef BEVAL_H
#define BEVAL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum BevalStatus {
  BEVAL_STATUS_OK = 0,
  BEVAL_STATUS_VALIDATION = 1,
  BEVAL_STATUS_IO = 2,
  BEVAL_STATUS_INTERNAL = 3,
  /**
   * Null pointer, bad UTF-8 or an undersized output buffer.
   */
  BEVAL_STATUS_INVALID_ARGUMENT = 4,
  BEVAL_STATUS_PANIC = 5,
} BevalStatus;

typedef enum BevalClass {
  BEVAL_CLASS_VEHICLE = 0,
  BEVAL_CLASS_HUMAN = 1,
  BEVAL_CLASS_DRIVABLE = 2,
} BevalClass;

typedef enum BevalDirection {
  BEVAL_DIRECTION_DROP = 0,
  BEVAL_DIRECTION_INCREASE = 1,
  BEVAL_DIRECTION_FLAT = 2,
} BevalDirection;

typedef struct BevalCloud BevalCloud;

typedef struct BevalGrid BevalGrid;

typedef struct BevalIou BevalIou;

/**
 * Sector grid for subsampling. With `fixed_theta` zero the elevation
 * range of each cloud is used and `theta_min`/`theta_max` are ignored.
 */
typedef struct BevalSectorSpec {
  uint32_t theta_sectors;
  uint32_t phi_sectors;
  uint8_t fixed_theta;
  /**
   * Radians.
   */
  double theta_min;
  double theta_max;
} BevalSectorSpec;

/**
 * Oriented 3D box in the ego frame. `class` is `Vehicle` or `Human`.
 */
typedef struct BevalBox {
  double center[3];
  /**
   * Length, width, height.
   */
  double size[3];
  double yaw;
  enum BevalClass class_;
} BevalBox;

/**
 * Finalized IoU for one class. `iou` is NaN when `defined` is zero.
 */
typedef struct BevalClassIou {
  enum BevalClass class_;
  uint64_t intersection;
  uint64_t union_;
  uint8_t defined;
  double iou;
} BevalClassIou;

typedef struct BevalResizePlan {
  uint32_t src_width;
  uint32_t src_height;
  double scale;
  uint32_t scaled_width;
  uint32_t scaled_height;
  uint32_t crop_x;
  uint32_t crop_y;
  uint32_t target_width;
  uint32_t target_height;
} BevalResizePlan;

typedef struct BevalIntrinsics {
  double fx;
  double fy;
  double cx;
  double cy;
  uint32_t width;
  uint32_t height;
} BevalIntrinsics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until
 * the next beval call on the same thread.
 */
const char *beval_last_error(void);

/**
 * Library version and pipeline tag, e.g. `beval-0.1.0+gt1`.
 */
const char *beval_version(void);

/**
 * Ego-frame cloud from `n` packed `x, y, z, intensity` quadruples.
 *
 * # Safety
 * `xyzi` must point to `4 * n` floats; `out` must be writable.
 */
enum BevalStatus beval_cloud_new(const float *xyzi, size_t n, struct BevalCloud **out);

/**
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum BevalStatus beval_cloud_read(const char *path, struct BevalCloud **out);

/**
 * # Safety
 * `cloud` must be a live handle; `path` a NUL-terminated string.
 */
enum BevalStatus beval_cloud_write(const struct BevalCloud *cloud, const char *path);

/**
 * Number of points; 0 for a null handle.
 *
 * # Safety
 * `cloud` must be null or a live handle.
 */
size_t beval_cloud_len(const struct BevalCloud *cloud);

/**
 * Copies points as packed `x, y, z, intensity` into `out`, which holds
 * `cap` floats (at least `4 * len`).
 *
 * # Safety
 * `cloud` must be a live handle; `out` must hold `cap` floats.
 */
enum BevalStatus beval_cloud_points(const struct BevalCloud *cloud, float *out, size_t cap);

/**
 * Sector subsampling. A null `spec` means 32 × 1500 sectors over the
 * observed elevation range.
 *
 * # Safety
 * `cloud` must be a live handle, `spec` null or valid, `out` writable.
 */
enum BevalStatus beval_cloud_subsample(const struct BevalCloud *cloud,
                                       const struct BevalSectorSpec *spec,
                                       struct BevalCloud **out);

/**
 * # Safety
 * `cloud` must be null or a handle not yet freed.
 */
void beval_cloud_free(struct BevalCloud *cloud);

/**
 * Grid over `n_classes` planes of `side × side` values (row-major, plane
 * after plane). Values must be 0/1 or, for probability grids, in [0, 1].
 *
 * # Safety
 * `classes` must hold `n_classes` entries and `data` `len` floats.
 */
enum BevalStatus beval_grid_new(double extent,
                                double resolution,
                                const enum BevalClass *classes,
                                size_t n_classes,
                                const float *data,
                                size_t len,
                                struct BevalGrid **out);

/**
 * Single-class occupancy grid from box footprints of `class`.
 *
 * # Safety
 * `boxes` must hold `n` entries; `out` must be writable.
 */
enum BevalStatus beval_rasterize_boxes(const struct BevalBox *boxes,
                                       size_t n,
                                       enum BevalClass class_,
                                       double extent,
                                       double resolution,
                                       struct BevalGrid **out);

/**
 * Reads a `BEVG` container; its side must match `extent / resolution`.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum BevalStatus beval_grid_read(const char *path,
                                 double extent,
                                 double resolution,
                                 struct BevalGrid **out);

/**
 * Writes a binary grid as a `BEVG` container.
 *
 * # Safety
 * `grid` must be a live handle; `path` a NUL-terminated string.
 */
enum BevalStatus beval_grid_write(const struct BevalGrid *grid, const char *path);

/**
 * Cells per side; 0 for a null handle.
 *
 * # Safety
 * `grid` must be null or a live handle.
 */
size_t beval_grid_side(const struct BevalGrid *grid);

/**
 * Number of class planes; 0 for a null handle.
 *
 * # Safety
 * `grid` must be null or a live handle.
 */
size_t beval_grid_num_classes(const struct BevalGrid *grid);

/**
 * Copies the class list into `out` (capacity `cap`).
 *
 * # Safety
 * `grid` must be a live handle; `out` must hold `cap` entries.
 */
enum BevalStatus beval_grid_classes(const struct BevalGrid *grid, enum BevalClass *out, size_t cap);

/**
 * Copies all values (plane after plane, row-major) into `out`.
 *
 * # Safety
 * `grid` must be a live handle; `out` must hold `cap` floats.
 */
enum BevalStatus beval_grid_data(const struct BevalGrid *grid, float *out, size_t cap);

/**
 * # Safety
 * `grid` must be null or a handle not yet freed.
 */
void beval_grid_free(struct BevalGrid *grid);

/**
 * # Safety
 * `classes` must hold `n` entries; `out` must be writable.
 */
enum BevalStatus beval_iou_new(const enum BevalClass *classes, size_t n, struct BevalIou **out);

/**
 * Adds one sample. Probability grids are binarized at 0.5.
 *
 * # Safety
 * All three handles must be live.
 */
enum BevalStatus beval_iou_accumulate(struct BevalIou *acc,
                                      const struct BevalGrid *pred,
                                      const struct BevalGrid *gt);

/**
 * Adds `other`'s counts into `acc`.
 *
 * # Safety
 * Both handles must be live and distinct.
 */
enum BevalStatus beval_iou_merge(struct BevalIou *acc, const struct BevalIou *other);

/**
 * Writes one entry per class into `out` (capacity `cap`).
 *
 * # Safety
 * `acc` must be a live handle; `out` must hold `cap` entries.
 */
enum BevalStatus beval_iou_finalize(const struct BevalIou *acc,
                                    struct BevalClassIou *out,
                                    size_t cap);

/**
 * # Safety
 * `acc` must be null or a handle not yet freed.
 */
void beval_iou_free(struct BevalIou *acc);

/**
 * Relative change `(cross - baseline) / baseline * 100` (negative for
 * a drop). Fails with `Validation` when `baseline` is not positive.
 *
 * # Safety
 * `delta` and `direction` must be writable.
 */
enum BevalStatus beval_delta_pct(double baseline,
                                 double cross,
                                 double *delta,
                                 enum BevalDirection *direction);

/**
 * Aspect-preserving scale and centered crop from `src_width × src_height`
 * to `target_height × target_width`.
 *
 * # Safety
 * `out` must be writable.
 */
enum BevalStatus beval_plan_resize_crop(uint32_t src_width,
                                        uint32_t src_height,
                                        uint32_t target_height,
                                        uint32_t target_width,
                                        struct BevalResizePlan *out);

/**
 * Intrinsics after applying `plan` to the image they describe.
 *
 * # Safety
 * `k` and `plan` must be valid; `out` must be writable.
 */
enum BevalStatus beval_adjust_intrinsics(const struct BevalIntrinsics *k,
                                         const struct BevalResizePlan *plan,
                                         struct BevalIntrinsics *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BEVAL_H */
