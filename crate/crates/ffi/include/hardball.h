#ifndef HARDBALL_H
#define HARDBALL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum HbStatus {
  HB_STATUS_OK = 0,
  HB_STATUS_INVALID_INPUT = 1,
  HB_STATUS_MULTIPLE_COLLISION = 2,
  HB_STATUS_EVENT_CAP = 3,
  HB_STATUS_CONDITION_FAILED = 4,
  HB_STATUS_AUDIT_FAILED = 5,
  HB_STATUS_CRITICAL = 6,
  HB_STATUS_NULL_POINTER = 10,
  HB_STATUS_BUFFER_TOO_SMALL = 11,
  HB_STATUS_OUT_OF_RANGE = 12,
  HB_STATUS_PANIC = 13,
} HbStatus;

typedef enum HbPolicy {
  HB_POLICY_ERROR_ON_ADJACENT = 0,
  HB_POLICY_FORBIDDEN = 1,
  HB_POLICY_RESOLVE_LEFT_FIRST = 2,
  HB_POLICY_RESOLVE_RIGHT_FIRST = 3,
} HbPolicy;

typedef enum HbTermination {
  HB_TERMINATION_SORTED = 0,
  HB_TERMINATION_EVENT_CAP_REACHED = 1,
  HB_TERMINATION_MULTIPLE_COLLISION = 2,
} HbTermination;

typedef enum HbStrategy {
  HB_STRATEGY_LEFTMOST = 0,
  HB_STRATEGY_RIGHTMOST = 1,
  HB_STRATEGY_RANDOM = 2,
  HB_STRATEGY_MOST_NEGATIVE = 3,
} HbStrategy;

/**
 * Masses, positions and velocities held as exact rationals.
 */
typedef struct HbSystem HbSystem;

typedef struct HbTrace HbTrace;

/**
 * Simulation settings. `max_events = 0` selects the default cap.
 */
typedef struct HbSimOptions {
  bool exact;
  double tol;
  uint64_t max_events;
  enum HbPolicy policy;
} HbSimOptions;

typedef struct HbConditions {
  bool geometric_ok;
  bool arithmetic_ok;
  bool weights_ok;
} HbConditions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Creates a system of `balls` balls from three arrays of that length.
 *
 * # Safety
 * Each array must hold `balls` readable doubles; `out` must be writable.
 */
enum HbStatus hb_system_new(size_t balls,
                            const double *masses,
                            const double *positions,
                            const double *velocities,
                            struct HbSystem **out);

/**
 * Creates a system from a JSON document with `masses`, `positions` and
 * `velocities`, each entry a number or a string such as `"1/100"`.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum HbStatus hb_system_from_json(const char *json, struct HbSystem **out);

/**
 * Number of balls, or 0 for NULL.
 *
 * # Safety
 * `system` must be NULL or a live handle.
 */
size_t hb_system_ball_count(const struct HbSystem *system);

/**
 * # Safety
 * `system` must be NULL or a handle not yet freed.
 */
void hb_system_free(struct HbSystem *system);

/**
 * Exact arithmetic, default tolerance and cap, abort on adjacent simultaneous contacts.
 */
struct HbSimOptions hb_sim_options_default(void);

/**
 * Simulates `system`. A trace is produced for `HB_STATUS_OK`,
 * `HB_STATUS_MULTIPLE_COLLISION` and `HB_STATUS_EVENT_CAP`; the latter two
 * report how the run stopped. `options` may be NULL for defaults.
 *
 * # Safety
 * `system` must be a live handle, `options` NULL or readable, `out` writable.
 */
enum HbStatus hb_simulate(const struct HbSystem *system,
                          const struct HbSimOptions *options,
                          struct HbTrace **out);

/**
 * # Safety
 * `trace` must be a live handle and `out` writable.
 */
enum HbStatus hb_trace_collision_count(const struct HbTrace *trace, uint64_t *out);

/**
 * # Safety
 * `trace` must be a live handle and `out` writable.
 */
enum HbStatus hb_trace_event_count(const struct HbTrace *trace, size_t *out);

/**
 * # Safety
 * `trace` must be a live handle and `out` writable.
 */
enum HbStatus hb_trace_termination(const struct HbTrace *trace, enum HbTermination *out);

/**
 * Time of event `index` (0-based), rounded to double in exact mode.
 *
 * # Safety
 * `trace` must be a live handle and `out` writable.
 */
enum HbStatus hb_trace_event_time(const struct HbTrace *trace, size_t index, double *out);

/**
 * Pair indices (1-based) of event `index`. `out_len` receives the count
 * even when `cap` is too small.
 *
 * # Safety
 * `trace` must be a live handle, `buf` writable for `cap` values, `out_len` writable.
 */
enum HbStatus hb_trace_event_pairs(const struct HbTrace *trace,
                                   size_t index,
                                   size_t *buf,
                                   size_t cap,
                                   size_t *out_len);

/**
 * # Safety
 * `trace` must be a live handle, `buf` writable for `cap` values, `out_len` writable.
 */
enum HbStatus hb_trace_final_velocities(const struct HbTrace *trace,
                                        double *buf,
                                        size_t cap,
                                        size_t *out_len);

/**
 * The event log as JSON lines. Release the string with `hb_string_free`.
 *
 * # Safety
 * `trace` must be a live handle and `out` writable.
 */
enum HbStatus hb_trace_to_jsonl(const struct HbTrace *trace, char **out);

/**
 * Replays the trace as numbers-game firings and audits every event.
 * Writes the inversion-number sequence (start, then after each event).
 * Returns `HB_STATUS_AUDIT_FAILED` with the event index in the error message.
 *
 * # Safety
 * `trace` must be a live handle, `buf` writable for `cap` values, `out_len` writable.
 */
enum HbStatus hb_trace_certify(const struct HbTrace *trace,
                               double tol,
                               uint64_t *buf,
                               size_t cap,
                               size_t *out_len);

/**
 * # Safety
 * `trace` must be NULL or a handle not yet freed.
 */
void hb_trace_free(struct HbTrace *trace);

/**
 * Evaluates the mass conditions. Returns `HB_STATUS_CONDITION_FAILED` when
 * the geometric-mean condition fails (the report is still written).
 *
 * # Safety
 * `masses` must hold `len` readable doubles and `out` be writable.
 */
enum HbStatus hb_check_conditions(const double *masses,
                                  size_t len,
                                  double tol,
                                  struct HbConditions *out);

/**
 * Plays a negative numbers game on a path with neighbour weights
 * `k_{i,i+1}` (`n - 1` values) from `start` (`n` values). `max_moves = 0`
 * selects the default. Returns `HB_STATUS_EVENT_CAP` if the play did not
 * terminate within `max_moves`.
 *
 * # Safety
 * Arrays must be readable for their lengths; `out_moves` and `out_terminated` writable.
 */
enum HbStatus hb_game_play(size_t n,
                           const double *neighbor_weights,
                           const double *start,
                           enum HbStrategy strategy,
                           uint64_t seed,
                           size_t max_moves,
                           double tol,
                           size_t *out_moves,
                           bool *out_terminated);

/**
 * Message for the last failure on this thread, or NULL. Valid until the
 * next call into this library on the same thread.
 */
const char *hb_last_error_message(void);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library and not yet freed.
 */
void hb_string_free(char *s);

const char *hb_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HARDBALL_H */
