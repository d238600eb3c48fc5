#ifndef PITA_H
#define PITA_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PitaStatus {
  PITA_STATUS_OK = 0,
  PITA_STATUS_NULL_ARGUMENT = 1,
  PITA_STATUS_INVALID_UTF8 = 2,
  PITA_STATUS_INVALID_MODE = 3,
  PITA_STATUS_PARSE_ERROR = 4,
  PITA_STATUS_ENGINE_ERROR = 5,
  PITA_STATUS_OUT_OF_RANGE = 6,
  PITA_STATUS_PANIC = 7,
} PitaStatus;

typedef enum PitaMode {
  PITA_MODE_PROB = 0,
  PITA_MODE_IND_EXC = 1,
  PITA_MODE_COUNT = 2,
  PITA_MODE_VITERBI = 3,
  PITA_MODE_POSS = 4,
} PitaMode;

/**
 * A parsed program together with the mode it was parsed for.
 */
typedef struct PitaProgram PitaProgram;

/**
 * The ground answers of one query.
 */
typedef struct PitaResult PitaResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null.
 *
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *pita_last_error(void);

/**
 * Parses `text` for evaluation in `mode`.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a writable pointer.
 * The handle written to `out` must be released with `pita_program_free`.
 */
enum PitaStatus pita_program_parse(const char *text, enum PitaMode mode, struct PitaProgram **out);

/**
 * Like `pita_program_parse` with the mode given by name
 * (`prob`, `ind-exc`, `count`, `viterbi`, `poss`).
 *
 * # Safety
 * As for `pita_program_parse`; `mode` must be NUL-terminated.
 */
enum PitaStatus pita_program_parse_named(const char *text,
                                         const char *mode,
                                         struct PitaProgram **out);

/**
 * # Safety
 * `program` must come from `pita_program_parse` and not be freed twice.
 * Null is ignored.
 */
void pita_program_free(struct PitaProgram *program);

/**
 * Answers `goal` against `program`. A `timeout_secs` of zero or less
 * means no time limit.
 *
 * # Safety
 * `program` must be a live handle, `goal` NUL-terminated and `out`
 * writable. The handle written to `out` must be released with
 * `pita_result_free`.
 */
enum PitaStatus pita_query(const struct PitaProgram *program,
                           const char *goal,
                           double timeout_secs,
                           struct PitaResult **out);

/**
 * Number of answers; zero for a null handle.
 *
 * # Safety
 * `result` must be null or a live handle.
 */
size_t pita_result_len(const struct PitaResult *result);

/**
 * The ground atom of answer `index`, or null when out of range. The
 * string is owned by `result`.
 *
 * # Safety
 * `result` must be null or a live handle.
 */
const char *pita_result_atom(const struct PitaResult *result, size_t index);

/**
 * The value of answer `index` as a float. Counts beyond 2^53 lose
 * precision; use `pita_result_text` for the exact digits.
 *
 * # Safety
 * `result` must be null or a live handle and `value` writable.
 */
enum PitaStatus pita_result_value(const struct PitaResult *result, size_t index, double *value);

/**
 * The value of answer `index` as text: exact digits for counts, the
 * shortest round-trip form otherwise. Owned by `result`.
 *
 * # Safety
 * `result` must be null or a live handle.
 */
const char *pita_result_text(const struct PitaResult *result, size_t index);

/**
 * # Safety
 * `result` must come from `pita_query` and not be freed twice. Null is
 * ignored.
 */
void pita_result_free(struct PitaResult *result);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PITA_H */
