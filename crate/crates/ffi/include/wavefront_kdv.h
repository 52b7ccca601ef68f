/* C interface for the wavefront-kdv toolkit. */

#ifndef WAVEFRONT_KDV_H
#define WAVEFRONT_KDV_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible API call.
 */
typedef enum WkStatus {
  /**
   * Success.
   */
  WkStatus_Ok = 0,
  /**
   * A required pointer argument was NULL.
   */
  WkStatus_NullPointer = 1,
  /**
   * An argument was malformed (bad UTF-8, non-finite number, ...).
   */
  WkStatus_InvalidArgument = 2,
  /**
   * Configuration text failed to parse or validate.
   */
  WkStatus_Config = 3,
  /**
   * A numerical operation failed (instability, lost resolution, ...).
   */
  WkStatus_Numeric = 4,
} WkStatus;

/**
 * Regular / singular verdict for a phase-space point.
 */
typedef enum WkClass {
  WkClass_Regular = 0,
  WkClass_Singular = 1,
  WkClass_Indeterminate = 2,
} WkClass;

/**
 * Opaque run configuration handle.
 */
typedef struct WkConfig WkConfig;

/**
 * Result of a detector sweep at one phase-space point.
 */
typedef struct WkDetectResult {
  /**
   * Fitted decay exponent of |W u| against the packet scale.
   */
  double exponent;
  /**
   * Coefficient of determination of the log-log fit.
   */
  double r2;
  /**
   * Threshold separating regular from singular exponents.
   */
  double n_thr;
  /**
   * Dead band around the threshold mapped to `Indeterminate`.
   */
  double margin;
  enum WkClass classification;
} WkDetectResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *wk_version(void);

/**
 * Message for the most recent failure on this thread.
 *
 * Valid until the next failing call on the same thread.  Never NULL.
 */
const char *wk_last_error(void);

/**
 * Create a configuration with library defaults.
 */
enum WkStatus wk_config_default(struct WkConfig **out);

/**
 * Parse `key = value` configuration text over the defaults.
 *
 * `text` must be NUL-terminated UTF-8.  On success `*out` owns a new
 * handle; free it with [`wk_config_free`].
 */
enum WkStatus wk_config_parse(const char *text, struct WkConfig **out);

/**
 * Release a configuration handle.  NULL is ignored.
 */
void wk_config_free(struct WkConfig *cfg);

/**
 * Copy the configuration's hex SHA-256 digest (64 chars + NUL) into `buf`.
 *
 * `len` must be at least 65.
 */
enum WkStatus wk_config_digest(const struct WkConfig *cfg, char *buf, uintptr_t len);

/**
 * Run the initial-data detector sweep at the configured phase-space point
 * (`detector.x`, `detector.xi`, `detector.t0`) and classify it.
 *
 * If `detector.n_thr` is negative the threshold is first calibrated from
 * reference smooth and jump data on the same sweep.
 */
enum WkStatus wk_detect(const struct WkConfig *cfg, struct WkDetectResult *out);

/**
 * Trace the bicharacteristic through (`trace.x0`, `trace.t0`) with
 * direction `trace.xi` and scale `trace.lambda` back to time 0; writes the
 * foot point into `*x_at_zero`.
 */
enum WkStatus wk_trace(const struct WkConfig *cfg, double *x_at_zero);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WAVEFRONT_KDV_H */
