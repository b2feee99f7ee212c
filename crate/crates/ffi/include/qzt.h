#ifndef QZT_H
#define QZT_H

/* Generated by cbindgen from the qzt-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Three-way traffic verdict of the anomaly score.
 */
typedef enum QztClass {
  QZT_CLASS_NORMAL = 0,
  QZT_CLASS_SUSPICIOUS = 1,
  QZT_CLASS_MALICIOUS = 2,
} QztClass;

/**
 * A segment's isolation level.
 */
typedef enum QztPolicy {
  QZT_POLICY_OPEN = 0,
  QZT_POLICY_RESTRICTED = 1,
  QZT_POLICY_ISOLATED = 2,
} QztPolicy;

/**
 * Result of every fallible call.
 */
typedef enum QztStatus {
  /**
   * The call succeeded.
   */
  QZT_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  QZT_STATUS_NULL_POINTER = 1,
  /**
   * An argument was out of range or inconsistent with the handle.
   */
  QZT_STATUS_INVALID_ARGUMENT = 2,
  /**
   * The filesystem refused a read or write.
   */
  QZT_STATUS_IO_ERROR = 3,
  /**
   * A checkpoint file exists but could not be decoded.
   */
  QZT_STATUS_PARSE_ERROR = 4,
  /**
   * A computation produced a non-finite number.
   */
  QZT_STATUS_NUMERIC_ERROR = 5,
} QztStatus;

/**
 * Access verdict for one request.
 */
typedef enum QztVerdict {
  QZT_VERDICT_GRANTED = 0,
  QZT_VERDICT_RESTRICTED = 1,
  QZT_VERDICT_DENIED = 2,
} QztVerdict;

/**
 * Opaque handle to a segment policy engine: fixed thresholds plus the
 * isolation state of every segment seen so far.
 */
typedef struct QztEngine QztEngine;

/**
 * Opaque handle to a trained (or freshly seeded) anomaly-scoring model.
 */
typedef struct QztModel QztModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * A static, human-readable description of a status code. Never null.
 */
const char *qzt_status_message(enum QztStatus status);

/**
 * The crate version as a static string. Never null.
 */
const char *qzt_version(void);

/**
 * Creates an angle-encoded model with seeded random parameters.
 *
 * On success `*out` owns the model; release it with [`qzt_model_free`].
 *
 * # Safety
 * `out` must be a valid pointer to writable memory.
 */
enum QztStatus qzt_model_new(size_t n_qubits,
                             size_t layers,
                             uint64_t seed,
                             double init_scale,
                             struct QztModel **out);

/**
 * Loads a model checkpoint written by [`qzt_model_save`] (or the `qzt`
 * command-line tool).
 *
 * # Safety
 * `path` must be a valid NUL-terminated string and `out` a valid pointer
 * to writable memory.
 */
enum QztStatus qzt_model_load(const char *path, struct QztModel **out);

/**
 * Writes the model as a checkpoint file.
 *
 * # Safety
 * `model` must be a live handle and `path` a valid NUL-terminated string.
 */
enum QztStatus qzt_model_save(const struct QztModel *model, const char *path);

/**
 * Releases a model handle. A null handle is ignored.
 *
 * # Safety
 * `model` must be a pointer returned by a `qzt_model_*` constructor that
 * has not been freed already.
 */
void qzt_model_free(struct QztModel *model);

/**
 * Scores one feature vector; the score lands in [0, 1], higher meaning
 * more anomalous.
 *
 * # Safety
 * `model` must be a live handle, `features` must point to `n_features`
 * readable doubles, and `score_out` must be writable.
 */
enum QztStatus qzt_anomaly_score(const struct QztModel *model,
                                 const double *features,
                                 size_t n_features,
                                 double *score_out);

/**
 * Buckets a score into a traffic class using thresholds
 * `0 <= gamma1 < gamma2 <= 1`.
 *
 * # Safety
 * `class_out` must be a valid pointer to writable memory.
 */
enum QztStatus qzt_classify(double score, double gamma1, double gamma2, enum QztClass *class_out);

/**
 * Blends an anomaly score with user and device trust signals (each in
 * [0, 1]) into a risk value, using the standard weights.
 *
 * Either signal array may be empty; an empty array contributes zero.
 *
 * # Safety
 * `user` and `device` must point to `n_user` and `n_device` readable
 * doubles respectively (null is allowed when the count is zero), and
 * `risk_out` must be writable.
 */
enum QztStatus qzt_risk_score(double score,
                              const double *user,
                              size_t n_user,
                              const double *device,
                              size_t n_device,
                              double *risk_out);

/**
 * Turns a risk value into an access verdict at thresholds
 * `0 <= tau_restrict < tau_deny <= 1`.
 *
 * # Safety
 * `verdict_out` must be a valid pointer to writable memory.
 */
enum QztStatus qzt_access_decide(double risk,
                                 double tau_restrict,
                                 double tau_deny,
                                 enum QztVerdict *verdict_out);

/**
 * Creates a policy engine. `grace_ticks` is the number of consecutive
 * flagged ticks tolerated before one more isolates a segment.
 *
 * On success `*out` owns the engine; release it with [`qzt_engine_free`].
 *
 * # Safety
 * `out` must be a valid pointer to writable memory.
 */
enum QztStatus qzt_engine_new(double gamma1,
                              double gamma2,
                              double tau_restrict,
                              double tau_deny,
                              uint32_t grace_ticks,
                              struct QztEngine **out);

/**
 * Feeds one scored flow for segment `(row, col)` through the isolation
 * state machine and reports the segment's resulting policy.
 *
 * # Safety
 * `engine` must be a live handle and `policy_out` writable.
 */
enum QztStatus qzt_engine_step(struct QztEngine *engine,
                               uint32_t row,
                               uint32_t col,
                               double score,
                               enum QztPolicy *policy_out);

/**
 * Releases an engine handle. A null handle is ignored.
 *
 * # Safety
 * `engine` must be a pointer returned by [`qzt_engine_new`] that has not
 * been freed already.
 */
void qzt_engine_free(struct QztEngine *engine);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QZT_H */
