#ifndef INFLUX_H
#define INFLUX_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum InfluxSizingMode {
  INFLUX_SIZING_MODE_PRACTICAL = 0,
  INFLUX_SIZING_MODE_THEORETICAL = 1,
} InfluxSizingMode;

/**
 * Result codes shared by every fallible call.
 */
typedef enum InfluxStatus {
  INFLUX_STATUS_OK = 0,
  INFLUX_STATUS_NULL_POINTER = 1,
  /**
   * A parameter is out of range (eps, delta, k, ...).
   */
  INFLUX_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Graph or stream text is malformed.
   */
  INFLUX_STATUS_PARSE_ERROR = 3,
  /**
   * The input is well formed but inconsistent, e.g. an update that would
   * drive a weight negative.
   */
  INFLUX_STATUS_DATA_ERROR = 4,
  INFLUX_STATUS_IO_ERROR = 5,
  INFLUX_STATUS_INVARIANT_VIOLATION = 6,
  /**
   * The output buffer is too small; the required length was written.
   */
  INFLUX_STATUS_BUFFER_TOO_SMALL = 7,
  INFLUX_STATUS_PANIC = 8,
} InfluxStatus;

typedef struct InfluxGraph InfluxGraph;

typedef struct InfluxIm InfluxIm;

typedef struct InfluxTopK InfluxTopK;

/**
 * One weight update: `sign` is +1 to increase, -1 to decrease.
 */
typedef struct InfluxUpdate {
  uint32_t u;
  uint32_t v;
  int32_t sign;
  double delta;
  uint64_t t;
} InfluxUpdate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread. Valid until the next
 * failing call on the same thread; never NULL.
 */
const char *influx_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *influx_version(void);

/**
 * Parses a graph from text (`n m MODEL` header, then `u v w` lines).
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum InfluxStatus influx_graph_from_text(const char *text, struct InfluxGraph **out);

/**
 * Reads a graph file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum InfluxStatus influx_graph_from_file(const char *path, struct InfluxGraph **out);

/**
 * # Safety
 * `g` must be NULL or a graph returned by this library, not yet freed.
 */
void influx_graph_free(struct InfluxGraph *g);

/**
 * Vertex count, or 0 for NULL.
 *
 * # Safety
 * `g` must be NULL or a live graph handle.
 */
uintptr_t influx_graph_num_vertices(const struct InfluxGraph *g);

/**
 * Edge count, or 0 for NULL.
 *
 * # Safety
 * `g` must be NULL or a live graph handle.
 */
uintptr_t influx_graph_num_edges(const struct InfluxGraph *g);

/**
 * Creates a top-k tracker over a copy of `g`.
 *
 * # Safety
 * `g` must be a live graph handle and `out` a valid pointer.
 */
enum InfluxStatus influx_topk_new(const struct InfluxGraph *g,
                                  uintptr_t k,
                                  double eps,
                                  double delta,
                                  uint64_t seed,
                                  struct InfluxTopK **out);

/**
 * Applies one update. A rejected update leaves the tracker unchanged.
 *
 * # Safety
 * `t` must be a live tracker handle and `e` a valid pointer.
 */
enum InfluxStatus influx_topk_process(struct InfluxTopK *t, const struct InfluxUpdate *e);

/**
 * Writes the current answer, highest estimate first. `written` receives
 * the answer length; when it exceeds `capacity` nothing else is written
 * and `BUFFER_TOO_SMALL` is returned. `estimates` may be NULL.
 *
 * # Safety
 * `vertices` (and `estimates` if non-NULL) must hold `capacity` elements.
 */
enum InfluxStatus influx_topk_query(const struct InfluxTopK *t,
                                    uint32_t *vertices,
                                    double *estimates,
                                    uintptr_t capacity,
                                    uintptr_t *written);

/**
 * The query threshold on degrees; NaN for NULL.
 *
 * # Safety
 * `t` must be NULL or a live tracker handle.
 */
double influx_topk_threshold(const struct InfluxTopK *t);

/**
 * # Safety
 * `t` must be NULL or a tracker returned by this library, not yet freed.
 */
void influx_topk_free(struct InfluxTopK *t);

/**
 * Creates an influence-maximization tracker over a copy of `g`.
 *
 * # Safety
 * `g` must be a live graph handle and `out` a valid pointer.
 */
enum InfluxStatus influx_im_new(const struct InfluxGraph *g,
                                uintptr_t k_max,
                                double eps,
                                double delta,
                                enum InfluxSizingMode mode,
                                uint64_t seed,
                                struct InfluxIm **out);

/**
 * # Safety
 * `t` must be a live tracker handle and `e` a valid pointer.
 */
enum InfluxStatus influx_im_process(struct InfluxIm *t, const struct InfluxUpdate *e);

/**
 * Selects up to `k` seeds into `seeds` (capacity `k`), writing the count
 * to `written` and the influence estimate to `estimate` (may be NULL).
 *
 * # Safety
 * `seeds` must hold `k` elements.
 */
enum InfluxStatus influx_im_query(const struct InfluxIm *t,
                                  uintptr_t k,
                                  uint32_t *seeds,
                                  uintptr_t *written,
                                  double *estimate);

/**
 * # Safety
 * `t` must be NULL or a tracker returned by this library, not yet freed.
 */
void influx_im_free(struct InfluxIm *t);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* INFLUX_H */
