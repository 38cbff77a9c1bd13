#ifndef SCD_H
#define SCD_H

/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ScdRiskKind {
  // `(alpha * W + beta * FA + gamma * FR) / Q`
  SCD_RISK_KIND_SCD_WEIGHTED = 0,
  // `W + FA + FR`
  SCD_RISK_KIND_WORD_ERROR_ONLY = 1,
} ScdRiskKind;

// Result code of every fallible call.
typedef enum ScdStatus {
  SCD_STATUS_OK = 0,
  SCD_STATUS_NULL_POINTER = 1,
  SCD_STATUS_INVALID_UTF8 = 2,
  SCD_STATUS_PARSE_ERROR = 3,
  SCD_STATUS_INVALID_ARGUMENT = 4,
  SCD_STATUS_DATA_ERROR = 5,
  SCD_STATUS_INDEX_OUT_OF_RANGE = 6,
  SCD_STATUS_BUFFER_TOO_SMALL = 7,
  SCD_STATUS_PANIC = 8,
} ScdStatus;

// Parsed reference annotations, one per recording.
typedef struct ScdAnnotations ScdAnnotations;

// Parsed N-best lists.
typedef struct ScdNBestBatch ScdNBestBatch;

// Result of a toy training run.
typedef struct ScdTrainTrace ScdTrainTrace;

typedef struct ScdRiskConfig {
  double alpha;
  double beta;
  double gamma;
  // Speaker-turn insertion/deletion cost in thousandths (k = 1.1 is 1100).
  uint64_t st_cost_milli;
  bool normalize_scores;
  enum ScdRiskKind risk_kind;
} ScdRiskConfig;

typedef struct ScdErrorCounts {
  uint32_t word_errors;
  uint32_t st_insertions;
  uint32_t st_deletions;
  uint32_t st_correct;
} ScdErrorCounts;

typedef struct ScdLossSummary {
  double expected_risk;
  double nll_term;
  double total;
  double expected_fa;
  double expected_fr;
  double expected_w;
  size_t n_hypotheses;
} ScdLossSummary;

typedef struct ScdPrecisionRecall {
  double precision;
  double recall_count;
  double recall_duration;
  double f1;
  size_t n_predictions_kept;
  size_t n_predictions_dropped;
  size_t n_correct;
  size_t n_fa;
  size_t n_intervals;
  size_t n_hit;
  size_t n_fr;
} ScdPrecisionRecall;

typedef struct ScdSegmentation {
  double purity;
  double coverage;
  double f1;
} ScdSegmentation;

typedef struct ScdTrainStep {
  size_t step;
  double loss_total;
  double expected_risk;
  double expected_fa;
  double expected_fr;
  double expected_w;
  size_t argmax_candidate_index;
} ScdTrainStep;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread; empty after a success.
// The pointer stays valid until the next call on the same thread.
const char *scd_last_error(void);

// Default risk settings: alpha 1, beta 10, gamma 10, k 1.1, softmax
// normalization, weighted turn risk.
struct ScdRiskConfig scd_risk_config_default(void);

// Harmonic mean of two rates (0 when both are 0).
double scd_f1(double a, double b);

// Aligns two transcripts and reports the error counts and cost.
//
// # Safety
// String arguments must be NUL-terminated; output pointers must be valid.
enum ScdStatus scd_align(const char *reference,
                         const char *hypothesis,
                         uint64_t st_cost_milli,
                         struct ScdErrorCounts *out_counts,
                         uint64_t *out_cost_milli);

// Risk of one hypothesis transcript against a non-empty reference.
//
// # Safety
// String arguments must be NUL-terminated; pointers must be valid.
enum ScdStatus scd_per_hyp_risk(const char *reference,
                                const char *hypothesis,
                                const struct ScdRiskConfig *config,
                                double *out_risk);

// Parses N-best JSON lines into a new batch handle.
//
// # Safety
// `jsonl` must be NUL-terminated; `out_batch` must be valid.
enum ScdStatus scd_nbest_batch_parse(const char *jsonl, struct ScdNBestBatch **out_batch);

// Number of utterances in the batch (0 for a null handle).
//
// # Safety
// `batch` must be null or a live handle.
size_t scd_nbest_batch_len(const struct ScdNBestBatch *batch);

// # Safety
// `batch` must be null or a handle from [`scd_nbest_batch_parse`] that has
// not been freed.
void scd_nbest_batch_free(struct ScdNBestBatch *batch);

// Expected risk of utterance `index`.
//
// # Safety
// `batch` must be a live handle; other pointers must be valid.
enum ScdStatus scd_nbest_expected_risk(const struct ScdNBestBatch *batch,
                                       size_t index,
                                       const struct ScdRiskConfig *config,
                                       struct ScdLossSummary *out);

// Gradient of utterance `index`'s expected risk w.r.t. its hypothesis log
// scores. Writes `*out_len` entries; fails with `BufferTooSmall` (and still
// sets `*out_len`) when `capacity` is insufficient.
//
// # Safety
// `out_gradient` must point to `capacity` writable doubles.
enum ScdStatus scd_nbest_risk_gradient(const struct ScdNBestBatch *batch,
                                       size_t index,
                                       const struct ScdRiskConfig *config,
                                       double *out_gradient,
                                       size_t capacity,
                                       size_t *out_len);

// Batch loss: summed expected risks plus `lambda * nll`.
//
// # Safety
// `batch` must be a live handle; other pointers must be valid.
enum ScdStatus scd_nbest_batch_loss(const struct ScdNBestBatch *batch,
                                    const struct ScdRiskConfig *config,
                                    double lambda,
                                    double nll,
                                    struct ScdLossSummary *out);

// Parses RTTM text into a new annotation handle.
//
// # Safety
// `rttm` must be NUL-terminated; `out_annotations` must be valid.
enum ScdStatus scd_annotations_parse_rttm(const char *rttm,
                                          struct ScdAnnotations **out_annotations);

// Number of recordings (0 for a null handle).
//
// # Safety
// `annotations` must be null or a live handle.
size_t scd_annotations_len(const struct ScdAnnotations *annotations);

// # Safety
// `annotations` must be null or a handle that has not been freed.
void scd_annotations_free(struct ScdAnnotations *annotations);

// Scores predicted change times (seconds) for one recording. Either output
// pointer may be null to skip that report.
//
// # Safety
// `timestamps` must point to `n_timestamps` doubles (or be null when
// `n_timestamps` is 0).
enum ScdStatus scd_annotations_score(const struct ScdAnnotations *annotations,
                                     const char *recording_id,
                                     const double *timestamps,
                                     size_t n_timestamps,
                                     double collar,
                                     struct ScdPrecisionRecall *out_changes,
                                     struct ScdSegmentation *out_segmentation);

// Trains the toy model on the candidates within `edit_budget` edits of
// `reference` over the comma-separated `vocab`. `nbest` 0 means all
// candidates.
//
// # Safety
// String arguments must be NUL-terminated; pointers must be valid.
enum ScdStatus scd_train_toy(const char *reference,
                             const char *vocab,
                             size_t edit_budget,
                             size_t steps,
                             double learning_rate,
                             size_t nbest,
                             double lambda,
                             const struct ScdRiskConfig *config,
                             uint64_t seed,
                             struct ScdTrainTrace **out_trace);

// Number of records (steps + 1) in a trace.
//
// # Safety
// `trace` must be null or a live handle.
size_t scd_train_trace_len(const struct ScdTrainTrace *trace);

// # Safety
// `trace` must be a live handle; `out` must be valid.
enum ScdStatus scd_train_trace_step(const struct ScdTrainTrace *trace,
                                    size_t index,
                                    struct ScdTrainStep *out);

// # Safety
// `trace` must be null or a handle that has not been freed.
void scd_train_trace_free(struct ScdTrainTrace *trace);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SCD_H */
