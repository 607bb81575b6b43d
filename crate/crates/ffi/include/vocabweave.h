#ifndef VOCABWEAVE_H
#define VOCABWEAVE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum VwStatus {
  VW_STATUS_OK = 0,
  /**
   * Null pointer, bad UTF-8 or an out-of-range number.
   */
  VW_STATUS_INVALID_ARGUMENT = 1,
  /**
   * Input text (JSON, TSV, model file) could not be parsed.
   */
  VW_STATUS_PARSE = 2,
  VW_STATUS_IO = 3,
  /**
   * The request was valid but has no answer, e.g. an unseen lemma.
   */
  VW_STATUS_NOT_FOUND = 4,
  /**
   * Rejected by the model, e.g. time running backwards.
   */
  VW_STATUS_REJECTED = 5,
  VW_STATUS_PANIC = 6,
} VwStatus;

/**
 * Opaque learner memory state.
 */
typedef struct VwLearner VwLearner;

/**
 * Opaque guessability model.
 */
typedef struct VwNGram VwNGram;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. Valid until
 * the next call into this library from the same thread.
 */
const char *vw_last_error(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void vw_string_free(char *s);

/**
 * `2^(-elapsed/half_life)`, both in days.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum VwStatus vw_recall(double elapsed_days, double half_life, double *out);

/**
 * Boost factor `a * H^(-b) * c^(-R) + d`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum VwStatus vw_boost(double half_life,
                       double recall,
                       double a,
                       double b,
                       double c,
                       double d,
                       double *out);

/**
 * A learner with default parameters and no memories.
 *
 * # Safety
 * `learner_id` must be a NUL-terminated string; `out` valid for writes.
 */
enum VwStatus vw_learner_new(const char *learner_id, struct VwLearner **out);

/**
 * Restores a learner serialized by [`vw_learner_to_json`].
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` valid for writes.
 */
enum VwStatus vw_learner_from_json(const char *json, struct VwLearner **out);

/**
 * # Safety
 * `learner` must come from this library and not have been freed; null is
 * ignored.
 */
void vw_learner_free(struct VwLearner *learner);

/**
 * Records an exposure at `timestamp` (seconds since the epoch).
 *
 * # Safety
 * `learner` must be a live handle; `lemma` a NUL-terminated string.
 */
enum VwStatus vw_learner_apply_exposure(struct VwLearner *learner,
                                        const char *lemma,
                                        double timestamp);

/**
 * Recall probability of `lemma` at `timestamp`; `VW_STATUS_NOT_FOUND` for a
 * lemma never seen.
 *
 * # Safety
 * `learner` must be a live handle; `lemma` a NUL-terminated string; `out`
 * valid for writes.
 */
enum VwStatus vw_learner_recall(const struct VwLearner *learner,
                                const char *lemma,
                                double timestamp,
                                double *out);

/**
 * # Safety
 * `learner` must be a live handle; `out` valid for writes.
 */
enum VwStatus vw_learner_to_json(const struct VwLearner *learner, char **out);

/**
 * Trains on raw text.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` valid for writes.
 */
enum VwStatus vw_ngram_train(const char *text, size_t order, double k, struct VwNGram **out);

/**
 * Loads a model file written by `vocabweave train-lm`.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` valid for writes.
 */
enum VwStatus vw_ngram_load(const char *path, struct VwNGram **out);

/**
 * # Safety
 * `model` must come from this library and not have been freed; null is
 * ignored.
 */
void vw_ngram_free(struct VwNGram *model);

/**
 * Guessability of every word token in `text`, as a JSON array of
 * `{"token_index": i, "g": value}`.
 *
 * # Safety
 * `model` must be a live handle; `text` a NUL-terminated string; `out`
 * valid for writes.
 */
enum VwStatus vw_ngram_score(const struct VwNGram *model, const char *text, char **out);

/**
 * Annotates `text` for `learner` and returns the document as JSON.
 *
 * `model` may be null, in which case every word gets guessability 0.5.
 * `dictionary_tsv` holds `lemma<TAB>translation` lines.
 *
 * # Safety
 * Handles must be live (or null where allowed); strings NUL-terminated;
 * `out` valid for writes.
 */
enum VwStatus vw_annotate(const struct VwLearner *learner,
                          const struct VwNGram *model,
                          const char *dictionary_tsv,
                          const char *text,
                          double density,
                          double now,
                          char **out);

/**
 * Percentile revisitation time of `text`, in days, over the lemmas covering
 * a share `alpha` of its tokens. `VW_STATUS_NOT_FOUND` when no such lemma
 * recurs.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out_days` valid for writes.
 */
enum VwStatus vw_corpus_revisitation(const char *text,
                                     double alpha,
                                     double words_per_minute,
                                     double hours_per_day,
                                     double percentile,
                                     double *out_days);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VOCABWEAVE_H */
