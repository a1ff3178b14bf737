#ifndef PAIREDMC_H
#define PAIREDMC_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PmcStatus {
  PMC_STATUS_OK = 0,
  // A required pointer was null.
  PMC_STATUS_NULL_ARGUMENT = 1,
  // An argument was out of range, not UTF-8, or a buffer was too small.
  PMC_STATUS_INVALID_ARGUMENT = 2,
  PMC_STATUS_CONFIG = 3,
  PMC_STATUS_PARSE = 4,
  PMC_STATUS_IO = 5,
  PMC_STATUS_DATA = 6,
  // Generation stalled or ran out of candidates.
  PMC_STATUS_GENERATION = 7,
  // A Rust panic was caught at the boundary.
  PMC_STATUS_INTERNAL = 8,
} PmcStatus;

typedef enum PmcFormat {
  // `id,s1,...,sN`
  PMC_FORMAT_INTERVAL = 0,
  // `id,state,duration`
  PMC_FORMAT_EPISODE = 1,
} PmcFormat;

typedef enum PmcEngine {
  PMC_ENGINE_PAIRED_MC = 0,
  PMC_ENGINE_TVMC = 1,
} PmcEngine;

// Opaque corpus handle.
typedef struct PmcCorpus PmcCorpus;

// Synthesis settings. Start from [`pmc_synth_options_default`].
typedef struct PmcSynthOptions {
  enum PmcEngine engine;
  // Candidate window half-width, in intervals.
  uint32_t delta;
  // Context order, 1 to 3.
  uint32_t order;
  uint64_t seed;
  // Sequences to generate; 0 means one per source sequence.
  size_t count;
  // Worker threads; 0 uses all cores.
  size_t workers;
  // Extend the source with a chain-generated buffer before synthesis.
  bool buffer;
  // Take a chain step instead of failing when no candidate exists.
  bool tvmc_fallback;
} PmcSynthOptions;

typedef struct PmcKsResult {
  double d;
  double p;
} PmcKsResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the most recent failure on this thread, or null. The
// pointer stays valid until the next failing call on the same thread.
const char *pmc_last_error(void);

// Loads a corpus file. The alphabet is the labels in order of first
// appearance.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
enum PmcStatus pmc_corpus_load(const char *path, enum PmcFormat format, struct PmcCorpus **out);

// # Safety
// `corpus` must be a live handle and `path` a NUL-terminated string.
enum PmcStatus pmc_corpus_save(const struct PmcCorpus *corpus,
                               const char *path,
                               enum PmcFormat format);

// Releases a handle. Null is ignored.
//
// # Safety
// `corpus` must be null or a handle not yet freed.
void pmc_corpus_free(struct PmcCorpus *corpus);

// Number of sequences; 0 for null.
//
// # Safety
// `corpus` must be null or a live handle.
size_t pmc_corpus_len(const struct PmcCorpus *corpus);

// Intervals per sequence; 0 for null.
//
// # Safety
// `corpus` must be null or a live handle.
size_t pmc_corpus_sequence_length(const struct PmcCorpus *corpus);

// Alphabet size; 0 for null.
//
// # Safety
// `corpus` must be null or a live handle.
size_t pmc_corpus_state_count(const struct PmcCorpus *corpus);

// Label of state `state`, or null when out of range. Owned by the handle.
//
// # Safety
// `corpus` must be null or a live handle.
const char *pmc_corpus_state_label(const struct PmcCorpus *corpus, size_t state);

// Id of sequence `index`, or null when out of range. Owned by the handle.
//
// # Safety
// `corpus` must be null or a live handle.
const char *pmc_corpus_sequence_id(const struct PmcCorpus *corpus, size_t index);

// Copies the state ids of sequence `index` into `buf`, which must hold at
// least `pmc_corpus_sequence_length` entries.
//
// # Safety
// `corpus` must be a live handle and `buf` valid for `buf_len` writes.
enum PmcStatus pmc_corpus_states(const struct PmcCorpus *corpus,
                                 size_t index,
                                 uint16_t *buf,
                                 size_t buf_len);

// Hierarchical clustering (Hamming distance, complete linkage) with the
// cut chosen by Dunn index over `k_min..=k_max`. Clusters smaller than
// `min_size` are grouped together; 0 uses 5% of the corpus. Writes one
// label per sequence to `labels` and the final cluster count to `k_out`.
//
// # Safety
// `corpus` must be a live handle, `labels` valid for `labels_len` writes
// and `k_out` null or valid.
enum PmcStatus pmc_cluster(const struct PmcCorpus *corpus,
                           size_t k_min,
                           size_t k_max,
                           size_t min_size,
                           size_t *labels,
                           size_t labels_len,
                           size_t *k_out);

// Defaults: paired-MC, delta 60, order 1, seed 0, buffered, with fallback.
struct PmcSynthOptions pmc_synth_options_default(void);

// Generates a synthetic corpus. With `cluster_labels` non-null (one label
// per sequence, `labels_len` entries) each output draws a cluster in
// proportion to its size and synthesizes from that cluster only.
//
// # Safety
// `corpus` must be a live handle, `options` and `out` valid pointers and
// `cluster_labels` null or valid for `labels_len` reads.
enum PmcStatus pmc_synthesize(const struct PmcCorpus *corpus,
                              const struct PmcSynthOptions *options,
                              const size_t *cluster_labels,
                              size_t labels_len,
                              struct PmcCorpus **out);

// Two-sample Kolmogorov-Smirnov test.
//
// # Safety
// `x` and `y` must be valid for `nx` and `ny` reads; `out` must be valid.
enum PmcStatus pmc_ks_two_sample(const double *x,
                                 size_t nx,
                                 const double *y,
                                 size_t ny,
                                 struct PmcKsResult *out);

// Shannon entropy (natural log) of the state distribution of sequence `index`.
//
// # Safety
// `corpus` must be a live handle and `out` valid.
enum PmcStatus pmc_sequence_entropy(const struct PmcCorpus *corpus, size_t index, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PAIREDMC_H */
