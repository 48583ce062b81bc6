#ifndef RFSME_H
#define RFSME_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum {
  RFSME_STATUS_OK = 0,
  RFSME_STATUS_NULL_ARGUMENT = 1,
  RFSME_STATUS_INVALID_ARGUMENT = 2,
  RFSME_STATUS_IO = 3,
  RFSME_STATUS_TRUNCATED = 4,
  RFSME_STATUS_UNALIGNED = 5,
  RFSME_STATUS_UNSUPPORTED_COLORSPACE = 6,
  RFSME_STATUS_BAD_FORMAT = 7,
  RFSME_STATUS_DIMENSION_MISMATCH = 8,
  RFSME_STATUS_BUFFER_TOO_SMALL = 9,
  RFSME_STATUS_PANIC = 10,
} RfsmeStatus;

/**
 * Strategy identifiers accepted by [`rfsme_run`].
 */
typedef enum {
  RFSME_STRATEGY_FULL = 0,
  RFSME_STRATEGY_CBFPS = 1,
  RFSME_STRATEGY_FPME = 2,
  RFSME_STRATEGY_IE_SME = 3,
  RFSME_STRATEGY_RFSME = 4,
} RfsmeStrategy;

/**
 * Opaque run result.
 */
typedef struct RfsmeReport RfsmeReport;

/**
 * Opaque sequence of luma frames.
 */
typedef struct RfsmeSequence RfsmeSequence;

/**
 * Run parameters. Start from [`rfsme_config_default`].
 */
typedef struct {
  int32_t qp;
  /**
   * Integer search range in pixels; 0 picks 16 up to 176 wide, else 32.
   */
  int32_t range;
  uint32_t refs;
  uint32_t th1;
  uint32_t th2;
  uint32_t rf_num;
  uint32_t rf_den;
  uint32_t rd_num;
  uint32_t rd_den;
  /**
   * Non-zero: also build the step-2 distance histogram.
   */
  uint8_t audit;
  /**
   * Worker threads; 0 uses every core.
   */
  uint32_t jobs;
} RfsmeConfig;

/**
 * One strategy's totals over a run.
 */
typedef struct {
  /**
   * An [`RfsmeStrategy`] value.
   */
  int32_t strategy;
  uint64_t partitions;
  uint64_t points;
  double sp_per_pt;
  uint64_t refinements;
  uint64_t total_cost;
  /**
   * Prediction PSNR in dB; +infinity for an exact prediction.
   */
  double mc_psnr_db;
  /**
   * Step-2 distance counts for d = 0, 1, 2 and > 2 (audit runs only).
   */
  uint64_t histogram[4];
} RfsmeStrategyStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Loads a raw I420 or Y4M file.
 *
 * `width`/`height` may be 0 for Y4M input (taken from the header).
 * `frames` = 0 loads every whole frame in the file; at least two are
 * needed.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
RfsmeStatus rfsme_sequence_load(const char *path,
                                uint32_t width,
                                uint32_t height,
                                uint32_t frames,
                                RfsmeSequence **out);

/**
 * Generates a synthetic sequence: `kind` is `static`, `global-shift`,
 * `global-shift:DX,DY` or `textured-drift`.
 *
 * # Safety
 * `kind` must be a NUL-terminated string and `out` a valid pointer.
 */
RfsmeStatus rfsme_sequence_synth(const char *kind,
                                 uint32_t width,
                                 uint32_t height,
                                 uint32_t frames,
                                 uint64_t seed,
                                 RfsmeSequence **out);

/**
 * Wraps caller-owned luma samples (`frames` planes of `width * height`
 * bytes, back to back). The data is copied.
 *
 * # Safety
 * `samples` must point to `width * height * frames` readable bytes and
 * `out` must be a valid pointer.
 */
RfsmeStatus rfsme_sequence_from_luma(const uint8_t *samples,
                                     uint32_t width,
                                     uint32_t height,
                                     uint32_t frames,
                                     RfsmeSequence **out);

/**
 * Number of frames held; 0 for NULL.
 *
 * # Safety
 * `seq` must be NULL or a live handle.
 */
uint32_t rfsme_sequence_frame_count(const RfsmeSequence *seq);

/**
 * # Safety
 * `seq` must be NULL or a handle not yet freed.
 */
void rfsme_sequence_free(RfsmeSequence *seq);

/**
 * Defaults: QP 28, automatic range, one reference, thresholds 10/20,
 * ratios 5/4 and 3/2, no audit, all cores.
 */
RfsmeConfig rfsme_config_default(void);

/**
 * Runs the listed strategies (values of [`RfsmeStrategy`]) over `seq`.
 * `config` may be NULL for the defaults.
 *
 * # Safety
 * `seq` must be a live handle, `strategies` must point to `count` values,
 * `config` must be NULL or valid, and `out` must be a valid pointer.
 */
RfsmeStatus rfsme_run(const RfsmeSequence *seq,
                      const RfsmeConfig *config,
                      const int32_t *strategies,
                      size_t count,
                      RfsmeReport **out);

/**
 * Number of strategy rows; 0 for NULL.
 *
 * # Safety
 * `report` must be NULL or a live handle.
 */
size_t rfsme_report_len(const RfsmeReport *report);

/**
 * Copies row `index` (in request order) into `out`.
 *
 * # Safety
 * `report` must be a live handle and `out` a valid pointer.
 */
RfsmeStatus rfsme_report_row(const RfsmeReport *report, size_t index, RfsmeStrategyStats *out);

/**
 * Writes the CSV report, NUL-terminated, into `buf`. `needed` (may be NULL)
 * receives the required size including the terminator; call with a NULL
 * `buf` to query it.
 *
 * # Safety
 * `report` must be a live handle, `buf` NULL or `cap` writable bytes, and
 * `needed` NULL or valid.
 */
RfsmeStatus rfsme_report_csv(const RfsmeReport *report, char *buf, size_t cap, size_t *needed);

/**
 * Same as [`rfsme_report_csv`] for the markdown table.
 *
 * # Safety
 * As for [`rfsme_report_csv`].
 */
RfsmeStatus rfsme_report_markdown(const RfsmeReport *report, char *buf, size_t cap, size_t *needed);

/**
 * # Safety
 * `report` must be NULL or a handle not yet freed.
 */
void rfsme_report_free(RfsmeReport *report);

/**
 * Exp-Golomb bits to code `mv` against `pred`, both in quarter-pel.
 */
uint32_t rfsme_mv_bits(int32_t mv_x, int32_t mv_y, int32_t pred_x, int32_t pred_y);

/**
 * Motion Lagrange multiplier for `qp`.
 */
double rfsme_lambda_motion(int32_t qp);

/**
 * Message of the last failure on this thread, or an empty string. The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *rfsme_last_error_message(void);

/**
 * Library version, e.g. "0.1.0".
 */
const char *rfsme_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RFSME_H */
