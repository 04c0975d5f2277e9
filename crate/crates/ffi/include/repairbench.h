#ifndef REPAIRBENCH_H
#define REPAIRBENCH_H

#include <stddef.h>
#include <stdint.h>

/*
 Result code of every fallible call.
 */
typedef enum RbStatus {
  RB_STATUS_OK = 0,
  RB_STATUS_NULL_POINTER = 1,
  RB_STATUS_INVALID_UTF8 = 2,
  RB_STATUS_INVALID_ARGUMENT = 3,
  /*
   A Rust panic was caught at the boundary.
   */
  RB_STATUS_INTERNAL = 4,
} RbStatus;

/*
 Opaque review index.
 */
typedef struct RbTfidfIndex RbTfidfIndex;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message for the last failed call on this thread, or an empty string.
 The pointer stays valid until the next call into this library from the
 same thread.
 */
const char *rb_last_error_message(void);

/*
 Library version as a static string.
 */
const char *rb_version(void);

/*
 Release a string returned by this library. Null is ignored.

 # Safety
 `s` must come from this library and not have been freed already.
 */
void rb_string_free(char *s);

/*
 Clean raw model output into bare code.

 # Safety
 `raw` must be a NUL-terminated string; `out` must be writable.
 */
enum RbStatus rb_clean(const char *raw, char **out);

/*
 Writes 1 when `prediction` equals `target` after whitespace
 normalisation, else 0.

 # Safety
 Both strings must be NUL-terminated; `out` must be writable.
 */
enum RbStatus rb_exact_match(const char *prediction, const char *target, int32_t *out);

/*
 Corpus BLEU-4 in percent over `n` aligned hypothesis/reference pairs.

 # Safety
 `hypotheses` and `references` must each point to `n` NUL-terminated
 strings; `out` must be writable.
 */
enum RbStatus rb_bleu4(const char *const *hypotheses,
                       const char *const *references,
                       size_t n,
                       double *out);

/*
 CodeBLEU in percent for one hypothesis against one reference, with the
 default weights. `parse_failed` receives 1 when the hypothesis did not
 parse and its syntax components were scored as zero; it may be null.

 # Safety
 Both strings must be NUL-terminated; `out` must be writable.
 */
enum RbStatus rb_codebleu(const char *hypothesis,
                          const char *reference,
                          double *out,
                          int32_t *parse_failed);

/*
 Sample size for a proportion estimate with finite-population correction.

 # Safety
 `out` must be writable.
 */
enum RbStatus rb_sample_size(uint64_t population, double confidence, double margin, uint64_t *out);

/*
 Cohen's kappa over two aligned arrays of 0/1 ratings.

 # Safety
 `a` and `b` must each point to `n` bytes; `out` must be writable.
 */
enum RbStatus rb_cohen_kappa(const uint8_t *a, const uint8_t *b, size_t n, double *out);

/*
 Build an index over `n` (id, review) pairs.

 # Safety
 `ids` and `reviews` must each point to `n` NUL-terminated strings; `out`
 must be writable. Release the index with [`rb_index_free`].
 */
enum RbStatus rb_index_new(const char *const *ids,
                           const char *const *reviews,
                           size_t n,
                           struct RbTfidfIndex **out);

/*
 The `k` most similar reviews to `query` as a JSON array of
 `[id, cosine]` pairs, best first.

 # Safety
 `index` must come from [`rb_index_new`]; `query` must be NUL-terminated;
 `out` must be writable. Free the result with [`rb_string_free`].
 */
enum RbStatus rb_index_top_k(const struct RbTfidfIndex *index,
                             const char *query,
                             size_t k,
                             char **out);

/*
 Release an index. Null is ignored.

 # Safety
 `index` must come from [`rb_index_new`] and not have been freed already.
 */
void rb_index_free(struct RbTfidfIndex *index);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* REPAIRBENCH_H */
