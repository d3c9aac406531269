#ifndef TIFA_H
#define TIFA_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TifaStatus {
  TIFA_STATUS_OK = 0,
  TIFA_STATUS_NULL_POINTER = 1,
  TIFA_STATUS_INVALID_UTF8 = 2,
  TIFA_STATUS_INVALID_ARGUMENT = 3,
  // Input is well-formed but the statistic is undefined for it.
  TIFA_STATUS_DEGENERATE = 4,
  TIFA_STATUS_IO = 5,
  TIFA_STATUS_DATA = 6,
  TIFA_STATUS_PANIC = 7,
} TifaStatus;

typedef enum TifaScale {
  TIFA_SCALE_NOMINAL = 0,
  TIFA_SCALE_ORDINAL = 1,
} TifaScale;

// Opaque handle to a loaded benchmark.
typedef struct TifaBenchmark TifaBenchmark;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null if it succeeded.
// The pointer stays valid until the next call into this library on the
// same thread; do not free it.
const char *tifa_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *tifa_version(void);

// # Safety
// `s` must be null or a string returned by this library and not yet freed.
void tifa_string_free(char *s);

// Answer normalization: lowercase, strip punctuation, articles and extra
// whitespace.
//
// # Safety
// `text` must be a NUL-terminated string; `out` must be writable.
enum TifaStatus tifa_normalize_answer(const char *text, char **out);

// Token-level F1 between normalized answers.
//
// # Safety
// `prediction` and `gold` must be NUL-terminated strings; `out` must be writable.
enum TifaStatus tifa_token_f1(const char *prediction, const char *gold, double *out);

// Spearman rank correlation of two equal-length samples.
//
// # Safety
// `xs` and `ys` must each point to `len` readable doubles; `out` must be writable.
enum TifaStatus tifa_spearman_rho(const double *xs, const double *ys, uintptr_t len, double *out);

// Kendall tau-b of two equal-length samples.
//
// # Safety
// `xs` and `ys` must each point to `len` readable doubles; `out` must be writable.
enum TifaStatus tifa_kendall_tau(const double *xs, const double *ys, uintptr_t len, double *out);

// Krippendorff's alpha. `rows_json` is a JSON array with one array per item
// and one entry per annotator; entries are strings, numbers or null.
//
// # Safety
// `rows_json` must be a NUL-terminated string; `out` must be writable.
enum TifaStatus tifa_krippendorff_alpha(const char *rows_json, enum TifaScale scale, double *out);

// Human rating rubric: `n` elements with `x` missed (a multiple of 0.5),
// `none_correct` when none of the major objects appear. Writes 1..=5.
//
// # Safety
// `out` must be writable.
enum TifaStatus tifa_likert_rubric(uint32_t n, double x, bool none_correct, uint8_t *out);

// Parses a question-generation completion into JSON
// `{"elements": [...], "tuples": [...], "warnings": [...]}`.
//
// # Safety
// `completion` must be a NUL-terminated string; `out` must be writable.
enum TifaStatus tifa_parse_generation_output(const char *completion, char **out);

// Loads a benchmark JSONL file. On success `*out` owns a handle that must be
// released with [`tifa_benchmark_free`].
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum TifaStatus tifa_benchmark_load(const char *path, struct TifaBenchmark **out);

// # Safety
// `b` must be null or a handle from [`tifa_benchmark_load`] not yet freed.
void tifa_benchmark_free(struct TifaBenchmark *b);

// # Safety
// `b` must be a live handle; `out` must be writable.
enum TifaStatus tifa_benchmark_prompt_count(const struct TifaBenchmark *b, uintptr_t *out);

// # Safety
// `b` must be a live handle; `out` must be writable.
enum TifaStatus tifa_benchmark_question_count(const struct TifaBenchmark *b, uintptr_t *out);

// Benchmark statistics as a JSON object.
//
// # Safety
// `b` must be a live handle; `out` must be writable.
enum TifaStatus tifa_benchmark_stats_json(const struct TifaBenchmark *b, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TIFA_H */
