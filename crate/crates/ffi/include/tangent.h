#ifndef TANGENT_H
#define TANGENT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TangentChannelKind {
  TANGENT_CHANNEL_KIND_COLOR8 = 0,
  TANGENT_CHANNEL_KIND_COLOR16 = 1,
  TANGENT_CHANNEL_KIND_LABEL8 = 2,
  TANGENT_CHANNEL_KIND_DEPTH16 = 3,
} TangentChannelKind;

typedef enum TangentInterp {
  TANGENT_INTERP_BILINEAR = 0,
  TANGENT_INTERP_NEAREST = 1,
} TangentInterp;

typedef enum TangentStatus {
  TANGENT_STATUS_OK = 0,
  TANGENT_STATUS_INVALID_ARGUMENT = 1,
  TANGENT_STATUS_FORMAT = 2,
  TANGENT_STATUS_IO = 3,
  TANGENT_STATUS_RESOURCE_LIMIT = 4,
  TANGENT_STATUS_VALIDATION = 5,
  TANGENT_STATUS_INTERNAL = 6,
  TANGENT_STATUS_NULL_POINTER = 7,
  TANGENT_STATUS_BUFFER_TOO_SMALL = 8,
  TANGENT_STATUS_PANIC = 9,
} TangentStatus;

// Opaque icosphere handle.
typedef struct TangentIcosphere TangentIcosphere;

// Opaque tangent-image set handle.
typedef struct TangentSet TangentSet;

typedef struct TangentSetInfo {
  uintptr_t face_count;
  uintptr_t dim;
  uintptr_t channels;
  uint32_t base_level;
  uint32_t source_level;
} TangentSetInfo;

// Tangent plane of one face; angles in radians.
typedef struct TangentPlane {
  double center_lat;
  double center_lon;
  double half_extent;
  double pitch;
  uintptr_t dim;
} TangentPlane;

typedef struct TangentCamnormTarget {
  double alpha;
  double fov;
  double focal;
  uintptr_t out_dim;
} TangentCamnormTarget;

typedef struct TangentMatchStats {
  uint64_t p;
  uint64_t f;
  uint64_t n_left;
  uint64_t n_right;
} TangentMatchStats;

typedef struct TangentMatchingMetrics {
  double pmr;
  double ms;
  double precision;
} TangentMatchingMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Stable code string of the last error on this thread, or NULL.
// Valid until the next call into this library from the same thread.
const char *tangent_last_error_code(void);

// Human-readable message of the last error on this thread, or NULL.
const char *tangent_last_error_message(void);

// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum TangentStatus tangent_icosphere_new(uint32_t level, struct TangentIcosphere **out);

// # Safety
// `handle` must be NULL or a pointer from [`tangent_icosphere_new`] not yet freed.
void tangent_icosphere_free(struct TangentIcosphere *handle);

// # Safety
// `handle` must be a live icosphere handle; each output pointer may be NULL.
enum TangentStatus tangent_icosphere_counts(const struct TangentIcosphere *handle,
                                            uintptr_t *vertices,
                                            uintptr_t *faces,
                                            uintptr_t *edges);

// Mean angular distance between adjacent vertices, radians.
//
// # Safety
// `handle` must be a live icosphere handle and `out` writable.
enum TangentStatus tangent_icosphere_vertex_resolution(const struct TangentIcosphere *handle,
                                                       double *out);

// # Safety
// `handle` must be a live icosphere handle and `out` writable.
enum TangentStatus tangent_icosphere_surface_area_ratio(const struct TangentIcosphere *handle,
                                                        double *out);

// Face owning the unit direction `(x, y, z)`.
//
// # Safety
// `handle` must be a live icosphere handle and `out` writable.
enum TangentStatus tangent_icosphere_owning_face(const struct TangentIcosphere *handle,
                                                 double x,
                                                 double y,
                                                 double z,
                                                 uintptr_t *out);

// Side length of the tangent images for source level `s` and base level `b`.
//
// # Safety
// `out` must be writable.
enum TangentStatus tangent_dim(uint32_t source_level, uint32_t base_level, uintptr_t *out);

// Plane coordinates of `(lat, lon)` on the plane tangent at `(center_lat, center_lon)`.
//
// # Safety
// `x` and `y` must be writable.
enum TangentStatus tangent_gnomonic_forward(double center_lat,
                                            double center_lon,
                                            double lat,
                                            double lon,
                                            double *x,
                                            double *y);

// Renders an interleaved `height x 2*height x channels` float image to tangent planes.
//
// # Safety
// `data` must point to `2 * height * height * channels` readable floats and
// `out` must be writable.
enum TangentStatus tangent_to_tangent(const float *data,
                                      uintptr_t height,
                                      uintptr_t channels,
                                      enum TangentChannelKind kind,
                                      uint32_t base_level,
                                      enum TangentInterp interp,
                                      struct TangentSet **out);

// # Safety
// `handle` must be NULL or a pointer from [`tangent_to_tangent`] not yet freed.
void tangent_set_free(struct TangentSet *handle);

// # Safety
// `handle` must be a live set handle and `out` writable.
enum TangentStatus tangent_set_info(const struct TangentSet *handle, struct TangentSetInfo *out);

// # Safety
// `handle` must be a live set handle and `out` writable.
enum TangentStatus tangent_set_plane(const struct TangentSet *handle,
                                     uintptr_t face,
                                     struct TangentPlane *out);

// Copies face `face` (`dim * dim * channels` floats, row-major) into `out`.
//
// # Safety
// `handle` must be a live set handle and `out` must hold `len` writable floats.
enum TangentStatus tangent_set_face_data(const struct TangentSet *handle,
                                         uintptr_t face,
                                         float *out,
                                         uintptr_t len);

// Renders the set back to a `height x 2*height` image written into `out`.
//
// # Safety
// `handle` must be a live set handle and `out` must hold `len` writable floats.
enum TangentStatus tangent_set_render(const struct TangentSet *handle,
                                      uintptr_t height,
                                      float *out,
                                      uintptr_t len);

// Normalized camera for a level-`s` sphere at field of view `fov` (radians).
//
// # Safety
// `out` must be writable.
enum TangentStatus tangent_camnorm_target(uint32_t spherical_level,
                                          double fov,
                                          struct TangentCamnormTarget *out);

// Aggregates `count` per-pair statistics.
//
// # Safety
// `stats` must point to `count` readable records and `out` must be writable.
enum TangentStatus tangent_matching_metrics(const struct TangentMatchStats *stats,
                                            uintptr_t count,
                                            struct TangentMatchingMetrics *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TANGENT_H */
