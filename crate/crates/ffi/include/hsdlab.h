#ifndef HSDLAB_H
#define HSDLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum HsdStatus {
  HSD_STATUS_OK = 0,
  HSD_STATUS_NULL_POINTER = 1,
  HSD_STATUS_INVALID_UTF8 = 2,
  HSD_STATUS_IO = 3,
  HSD_STATUS_DATA = 4,
  HSD_STATUS_CONFIG = 5,
  HSD_STATUS_ARGUMENT = 6,
  HSD_STATUS_CHECKPOINT = 7,
  HSD_STATUS_RUNTIME = 8,
  HSD_STATUS_PANIC = 9,
} HsdStatus;

// A trained run directory loaded for inference.
typedef struct HsdModel HsdModel;

// Text cleaner with the bundled emoji and unigram tables.
typedef struct HsdPreprocessor HsdPreprocessor;

// Scores for one evaluation. Label codes are 0 for HOF and 1 for NOT.
typedef struct HsdMetrics {
  double hof_precision;
  double hof_recall;
  double hof_f1;
  double not_precision;
  double not_recall;
  double not_f1;
  double macro_precision;
  double macro_recall;
  double macro_f1;
  double accuracy;
  uint64_t n;
} HsdMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *hsd_version(void);

// Message for the last failure on this thread, or NULL. The pointer stays
// valid until the next failing call on the same thread.
const char *hsd_last_error(void);

// # Safety
// `s` must be NULL or a string returned by this library, not yet freed.
void hsd_string_free(char *s);

// Creates a cleaner with all cleaning steps enabled.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum HsdStatus hsd_preprocessor_new(struct HsdPreprocessor **out);

// # Safety
// `p` must be NULL or a handle from [`hsd_preprocessor_new`], not yet freed.
void hsd_preprocessor_free(struct HsdPreprocessor *p);

// Cleans `text` and writes the tokens as a JSON array of strings to `out`.
//
// # Safety
// `p` must be a live preprocessor handle, `text` a NUL-terminated string and
// `out` writable. The string stored in `out` must be freed with
// [`hsd_string_free`].
enum HsdStatus hsd_clean(const struct HsdPreprocessor *p, const char *text, char **out);

// Loads a directory written by `hsdlab train`.
//
// # Safety
// `run_dir` must be a NUL-terminated path and `out` writable.
enum HsdStatus hsd_model_open(const char *run_dir, struct HsdModel **out);

// # Safety
// `m` must be NULL or a handle from [`hsd_model_open`], not yet freed.
void hsd_model_free(struct HsdModel *m);

// Number of fold models in the ensemble; 0 for NULL.
//
// # Safety
// `m` must be NULL or a live model handle.
size_t hsd_model_num_folds(const struct HsdModel *m);

// Classifies one raw post. `out_prob` receives the mean NOT probability and
// `out_label` the label code (0 HOF, 1 NOT; NOT when prob ≥ threshold).
//
// # Safety
// `m` must be a live model handle, `text` NUL-terminated and both output
// pointers writable.
enum HsdStatus hsd_model_predict(const struct HsdModel *m,
                                 const char *text,
                                 double threshold,
                                 double *out_prob,
                                 int32_t *out_label);

// Writes the fold index of each of `n` samples into `out_fold_of`.
//
// # Safety
// `out_fold_of` must point to `n` writable `uint32_t` values.
enum HsdStatus hsd_kfold_split(size_t n, size_t k, uint64_t seed, uint32_t *out_fold_of);

// Scores `n` predicted label codes against gold codes.
//
// # Safety
// `preds` and `golds` must each point to `n` readable bytes; `out` must be
// writable.
enum HsdStatus hsd_score(const uint8_t *preds,
                         const uint8_t *golds,
                         size_t n,
                         struct HsdMetrics *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HSDLAB_H */
