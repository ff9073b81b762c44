#ifndef GREENSTREAM_H
#define GREENSTREAM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  GS_CDN_NONE = 0,
  GS_CDN_LOCAL = 1,
  GS_CDN_REMOTE = 2,
} GsCdn;

typedef enum {
  GS_STATUS_OK = 0,
  GS_STATUS_NULL_POINTER = 1,
  GS_STATUS_DOMAIN = 2,
  GS_STATUS_CONFIG = 3,
  GS_STATUS_ARGUMENT = 4,
  GS_STATUS_PARSE = 5,
  GS_STATUS_EMPTY_INPUT = 6,
  GS_STATUS_DEGENERATE = 7,
  GS_STATUS_INVALID_UTF8 = 8,
  GS_STATUS_PANIC = 9,
} GsStatus;

/**
 * A planned period.
 */
typedef struct GsSchedule GsSchedule;

/**
 * A daily carbon-intensity series.
 */
typedef struct GsSeries GsSeries;

/**
 * Incremental W/Mbps of each delivery-path segment.
 */
typedef struct {
  double access;
  double core;
  double local_dc;
  double remote_dc;
} GsPath;

typedef struct {
  /**
   * `YYYYMMDD`.
   */
  int32_t date;
  double ci_local;
  /**
   * NaN for single-CDN schedules.
   */
  double ci_remote;
  GsCdn cdn;
  double bitrate;
  double effective_intensity;
  double budget;
} GsDay;

typedef struct {
  size_t period_days;
  size_t reduced_days;
  double max_reduced_fraction;
  double reduced_bitrate;
  double discount_fraction;
  double total_utility_loss;
  double net_utility_loss;
  double reward_rate;
  double rewards;
} GsSubscription;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 *
 * The pointer stays valid until the next library call on this thread.
 */
const char *gs_last_error(void);

/**
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void gs_string_free(char *s);

/**
 * Normalized utility in [0.2, 1] of `bitrate` Mbps for greenness factor `gamma`.
 *
 * # Safety
 * `out_utility` must be null or point to writable memory.
 */
GsStatus gs_utility(double bitrate, double gamma, double *out_utility);

/**
 * Utility lost stepping down from tier `from` to tier `to`.
 *
 * # Safety
 * `from` and `to` must be NUL-terminated strings; `out_loss` must be writable.
 */
GsStatus gs_utility_loss(const char *from, const char *to, double gamma, double *out_loss);

/**
 * Parses a `date,carbon_intensity_gco2eq_per_kwh` CSV held in memory.
 *
 * # Safety
 * `data` must point to `len` readable bytes; `region` must be a NUL-terminated
 * string; `out_series` must be writable.
 */
GsStatus gs_series_parse_csv(const uint8_t *data,
                             size_t len,
                             const char *region,
                             GsSeries **out_series);

/**
 * Number of days in `series`; 0 for null.
 *
 * # Safety
 * `series` must be null or a live handle.
 */
size_t gs_series_len(const GsSeries *series);

/**
 * # Safety
 * `series` must be null or a live handle; it is invalid afterwards.
 */
void gs_series_free(GsSeries *series);

/**
 * `local_dc / (core + remote_dc)`: the remote data center wins on days whose
 * remote/local intensity ratio is strictly below this.
 *
 * # Safety
 * `path` must be readable; `out_threshold` writable.
 */
GsStatus gs_selection_threshold(const GsPath *path, double *out_threshold);

/**
 * # Safety
 * `path` must be readable; `out_remote` writable.
 */
GsStatus gs_remote_preferred(const GsPath *path,
                             double ci_local,
                             double ci_remote,
                             bool *out_remote);

/**
 * # Safety
 * `local` and `remote` must be live handles; `path` readable; `out_days` writable.
 */
GsStatus gs_count_remote_days(const GsSeries *local,
                              const GsSeries *remote,
                              const GsPath *path,
                              size_t *out_days);

/**
 * Plans `local` (with `remote` when non-null) under `cap`.
 *
 * `strategy` is `single-<tier>` or `mixed:<n>:<deep>:<rest>`. A negative
 * `loss_decimals` sums exact per-day losses. Aggregates cover the
 * high-quality (gamma 1) and green (gamma 1.5) profiles. An infeasible plan
 * still succeeds; check [`gs_schedule_feasible`].
 *
 * # Safety
 * `local` must be a live handle, `remote` null or a live handle, `path`
 * readable, `strategy` a NUL-terminated string, `out_schedule` writable.
 */
GsStatus gs_plan(const GsSeries *local,
                 const GsSeries *remote,
                 const GsPath *path,
                 double cap,
                 const char *strategy,
                 int32_t loss_decimals,
                 GsSchedule **out_schedule);

/**
 * # Safety
 * `schedule` must be null or a live handle; it is invalid afterwards.
 */
void gs_schedule_free(GsSchedule *schedule);

/**
 * Days in the period; 0 for null.
 *
 * # Safety
 * `schedule` must be null or a live handle.
 */
size_t gs_schedule_len(const GsSchedule *schedule);

/**
 * # Safety
 * `schedule` must be null or a live handle.
 */
size_t gs_schedule_reduced_days(const GsSchedule *schedule);

/**
 * False for null.
 *
 * # Safety
 * `schedule` must be null or a live handle.
 */
bool gs_schedule_feasible(const GsSchedule *schedule);

/**
 * NaN for null.
 *
 * # Safety
 * `schedule` must be null or a live handle.
 */
double gs_schedule_avg_bitrate_reduction(const GsSchedule *schedule);

/**
 * # Safety
 * `schedule` must be a live handle; `out_day` writable.
 */
GsStatus gs_schedule_day(const GsSchedule *schedule, size_t index, GsDay *out_day);

/**
 * The whole schedule as JSON; release with [`gs_string_free`].
 *
 * # Safety
 * `schedule` must be a live handle; `out_json` writable.
 */
GsStatus gs_schedule_to_json(const GsSchedule *schedule, char **out_json);

/**
 * Two-tier subscription terms for a user with greenness factor `gamma`.
 *
 * Fails for infeasible schedules and mixed strategies.
 *
 * # Safety
 * `schedule` must be a live handle; `out_plan` writable.
 */
GsStatus gs_synthesize(const GsSchedule *schedule,
                       double gamma,
                       double reward_rate,
                       GsSubscription *out_plan);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GREENSTREAM_H */
