#ifndef MULTISEP_H
#define MULTISEP_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by the fallible entry points.
 */
typedef enum {
  MSEP_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  MSEP_STATUS_NULL_ARGUMENT = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  MSEP_STATUS_INVALID_UTF8 = 2,
  /**
   * Input text failed to parse or violated a state invariant.
   */
  MSEP_STATUS_PARSE_ERROR = 3,
  /**
   * The handle does not fit the requested analysis.
   */
  MSEP_STATUS_INVALID_STATE = 4,
  /**
   * The analysis itself failed.
   */
  MSEP_STATUS_ANALYSIS_ERROR = 5,
} MsepStatus;

/**
 * Opaque state handle: a pure state or a density operator.
 */
typedef struct MsepState MsepState;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread. The pointer stays
 * valid until the next failing call on the same thread; do not free it.
 */
const char *msep_last_error(void);

/**
 * Frees a string returned by any of the `*_json` functions.
 *
 * # Safety
 * `s` must be a pointer previously returned by this library and not yet
 * freed (or null, in which case nothing happens).
 */
void msep_string_free(char *s);

/**
 * Parses a state from the library's JSON text format (kinds "pure" and
 * "density"). Returns null on failure; see [`msep_last_error`].
 *
 * # Safety
 * `json` must point to a NUL-terminated string.
 */
MsepState *msep_state_parse(const char *json);

/**
 * Builds a named fixture (epr, ghz, ncat, w, basis, tiles, random_pure,
 * random_gsd). `dims`/`dims_len` may be null/0 for fixtures with implied
 * dimensions; `n` and `k` are ignored where not applicable (pass 0).
 * Returns null on failure.
 *
 * # Safety
 * `name` must be NUL-terminated; `dims`, when non-null, must point to
 * `dims_len` readable entries.
 */
MsepState *msep_state_fixture(const char *name,
                              const uint32_t *dims,
                              uintptr_t dims_len,
                              uintptr_t n,
                              uintptr_t k,
                              uint64_t seed);

/**
 * Frees a state handle.
 *
 * # Safety
 * `state` must come from this library and must not be used afterwards.
 */
void msep_state_free(MsepState *state);

/**
 * Serializes the state back to the JSON text format.
 *
 * # Safety
 * `state` must be a live handle; `out_json` must be a writable pointer.
 */
MsepStatus msep_state_to_json(const MsepState *state, char **out_json);

/**
 * Runs every applicable analysis and returns the machine report. Pass
 * `tol <= 0` for the default tolerance.
 *
 * # Safety
 * `state` must be a live handle; `out_json` must be writable.
 */
MsepStatus msep_report_json(const MsepState *state, uint64_t seed, double tol, char **out_json);

/**
 * Detects the all-parties Schmidt form of a pure state. Pass `tol <= 0`
 * for the default tolerance.
 *
 * # Safety
 * `state` must be a live handle; `out_json` must be writable.
 */
MsepStatus msep_gsd_json(const MsepState *state,
                         double tol,
                         uintptr_t retries,
                         uint64_t seed,
                         char **out_json);

/**
 * Partial-transpose report over all bipartitions.
 *
 * # Safety
 * `state` must be a live handle; `out_json` must be writable.
 */
MsepStatus msep_ppt_json(const MsepState *state, char **out_json);

/**
 * One-sided certification of a two-party state.
 *
 * # Safety
 * `state` must be a live handle; `out_json` must be writable.
 */
MsepStatus msep_classify_json(const MsepState *state, uint64_t seed, char **out_json);

/**
 * Classifies the three reductions of a three-party pure state; the record
 * includes any exclusion flags.
 *
 * # Safety
 * `state` must be a live handle; `out_json` must be writable.
 */
MsepStatus msep_triangle_json(const MsepState *state, uint64_t seed, char **out_json);

/**
 * Minimal purification of a density operator (appends one party of
 * dimension equal to the rank). Returns null on failure.
 *
 * # Safety
 * `state` must be a live handle.
 */
MsepState *msep_purify(const MsepState *state);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MULTISEP_H */
