#ifndef ADADEC_H
#define ADADEC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum AdadecFinishReason {
  ADADEC_FINISH_REASON_EOS = 0,
  ADADEC_FINISH_REASON_MAX_LEN,
  ADADEC_FINISH_REASON_CONTEXT_LIMIT,
} AdadecFinishReason;

typedef enum AdadecPolicy {
  ADADEC_POLICY_GREEDY = 0,
  ADADEC_POLICY_TEMPERATURE,
  ADADEC_POLICY_TOP_K,
  ADADEC_POLICY_TOP_P,
} AdadecPolicy;

typedef enum AdadecStatus {
  ADADEC_STATUS_OK = 0,
  ADADEC_STATUS_NULL_POINTER,
  ADADEC_STATUS_INVALID_UTF8,
  ADADEC_STATUS_LENGTH,
  ADADEC_STATUS_INVALID_TOKEN,
  ADADEC_STATUS_DOMAIN,
  ADADEC_STATUS_CONFIG,
  ADADEC_STATUS_BACKEND,
  ADADEC_STATUS_MOCK_MODEL,
  ADADEC_STATUS_TRAINING_DATA,
  ADADEC_STATUS_FIT_QUALITY,
  ADADEC_STATUS_INCONSISTENCY,
  ADADEC_STATUS_JSON,
  ADADEC_STATUS_IO,
  ADADEC_STATUS_OTHER,
  ADADEC_STATUS_PANIC,
} AdadecStatus;

typedef enum AdadecStrategy {
  ADADEC_STRATEGY_GREEDY = 0,
  ADADEC_STRATEGY_SAMPLING,
  ADADEC_STRATEGY_BEAM,
  ADADEC_STRATEGY_ADAPT,
  ADADEC_STRATEGY_ADADEC,
} AdadecStrategy;

// How `tau` in [`AdadecDecodeConfig`] is interpreted.
typedef enum AdadecTauMode {
  // Take tau from the threshold handle passed to the call.
  ADADEC_TAU_MODE_LEARNED = 0,
  ADADEC_TAU_MODE_FIXED,
  ADADEC_TAU_MODE_NEVER_PAUSE,
  ADADEC_TAU_MODE_ALWAYS_PAUSE,
} AdadecTauMode;

// Output of one decoding run.
typedef struct AdadecGeneration AdadecGeneration;

// A table-driven mock language model.
typedef struct AdadecModel AdadecModel;

// A learned entropy threshold.
typedef struct AdadecThreshold AdadecThreshold;

typedef struct AdadecDecodeConfig {
  enum AdadecStrategy strategy;
  enum AdadecPolicy policy;
  double temperature;
  size_t top_k;
  double top_p;
  enum AdadecTauMode tau_mode;
  double tau;
  size_t lookahead_width;
  size_t lookahead_len;
  size_t max_len;
  uint64_t seed;
  size_t beam_width;
  double adapt_a;
  double adapt_b;
  bool parallel_lookahead;
} AdadecDecodeConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the most recent failure on this thread, or null if none.
// The pointer stays valid until the next failing call on the same thread.
const char *adadec_last_error(void);

// Releases a string returned by this library.
//
// # Safety
// `s` must come from this library and not have been freed already.
void adadec_string_free(char *s);

// Shannon entropy in nats of a probability vector.
//
// # Safety
// `probs` must point to `len` readable doubles; `out` must be writable.
enum AdadecStatus adadec_entropy(const double *probs, size_t len, double *out);

// Builds a mock model from its JSON description.
//
// # Safety
// `json` must be a nul-terminated string; `out` must be writable.
enum AdadecStatus adadec_model_from_json(const char *json, struct AdadecModel **out);

// # Safety
// `model` must be a live handle.
size_t adadec_model_vocab_size(const struct AdadecModel *model);

// # Safety
// `model` must be null or a handle not yet freed.
void adadec_model_free(struct AdadecModel *model);

// Parses a threshold model from JSON, checking tau against the parameters.
//
// # Safety
// `json` must be a nul-terminated string; `out` must be writable.
enum AdadecStatus adadec_threshold_from_json(const char *json, struct AdadecThreshold **out);

// Derives tau from logistic parameters and a probability cutoff.
//
// # Safety
// `out` must be writable.
enum AdadecStatus adadec_threshold_from_parameters(double beta0,
                                                   double beta1,
                                                   double p_star,
                                                   struct AdadecThreshold **out);

// Learns a threshold from per-step entropies and top-1 correctness labels
// (non-zero = correct), with seeded class balancing.
//
// # Safety
// `entropies` and `labels` must each point to `len` readable elements;
// `out` must be writable.
enum AdadecStatus adadec_threshold_fit(const double *entropies,
                                       const uint8_t *labels,
                                       size_t len,
                                       uint64_t seed,
                                       struct AdadecThreshold **out);

// # Safety
// `threshold` must be a live handle.
double adadec_threshold_tau(const struct AdadecThreshold *threshold);

// Writes `beta0`, `beta1` and `p_star`; any output pointer may be null.
//
// # Safety
// `threshold` must be a live handle; non-null outputs must be writable.
enum AdadecStatus adadec_threshold_parameters(const struct AdadecThreshold *threshold,
                                              double *beta0,
                                              double *beta1,
                                              double *p_star);

// Serialises the threshold; release the string with [`adadec_string_free`].
//
// # Safety
// `threshold` must be a live handle; `out` must be writable.
enum AdadecStatus adadec_threshold_to_json(const struct AdadecThreshold *threshold, char **out);

// # Safety
// `threshold` must be null or a handle not yet freed.
void adadec_threshold_free(struct AdadecThreshold *threshold);

// Library defaults: pause-then-rerank decoding with a learned tau,
// B = 3, L = 5, greedy base policy.
struct AdadecDecodeConfig adadec_decode_config_default(void);

// Decodes `prompt` with `model`. `threshold` may be null unless the config
// asks for a learned tau.
//
// # Safety
// `model` and `config` must be valid; `prompt` must point to `prompt_len`
// token ids; `threshold` must be null or live; `out` must be writable.
enum AdadecStatus adadec_generate(const struct AdadecModel *model,
                                  const uint32_t *prompt,
                                  size_t prompt_len,
                                  const struct AdadecDecodeConfig *config,
                                  const struct AdadecThreshold *threshold,
                                  struct AdadecGeneration **out);

// Generated token ids; the array lives as long as the handle.
//
// # Safety
// `generation` must be a live handle; `len` must be writable.
const uint32_t *adadec_generation_tokens(const struct AdadecGeneration *generation, size_t *len);

// Number of decoding steps that paused to rerank.
//
// # Safety
// `generation` must be a live handle.
size_t adadec_generation_pauses(const struct AdadecGeneration *generation);

// # Safety
// `generation` must be a live handle.
double adadec_generation_pause_rate(const struct AdadecGeneration *generation);

// # Safety
// `generation` must be a live handle.
enum AdadecFinishReason adadec_generation_finish_reason(const struct AdadecGeneration *generation);

// Per-step log as JSON lines; release with [`adadec_string_free`].
//
// # Safety
// `generation` must be a live handle; `out` must be writable.
enum AdadecStatus adadec_generation_step_log(const struct AdadecGeneration *generation, char **out);

// # Safety
// `generation` must be null or a handle not yet freed.
void adadec_generation_free(struct AdadecGeneration *generation);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ADADEC_H */
