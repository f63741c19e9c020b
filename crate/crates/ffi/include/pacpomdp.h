#ifndef PACPOMDP_H
#define PACPOMDP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PacStatus {
  PAC_STATUS_OK = 0,
  PAC_STATUS_NULL_ARGUMENT = 1,
  PAC_STATUS_INVALID_ARGUMENT = 2,
  PAC_STATUS_INVALID_MODEL = 3,
  PAC_STATUS_PARSE = 4,
  PAC_STATUS_SIZE_LIMIT = 5,
  /**
   * Estimation or alignment could not recover the model.
   */
  PAC_STATUS_ESTIMATION = 6,
  PAC_STATUS_IO = 7,
  PAC_STATUS_PANIC = 8,
} PacStatus;

/**
 * Opaque model handle.
 */
typedef struct PacModel PacModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. The pointer is
 * valid until the next call into the library on this thread.
 */
const char *pac_last_error(void);

/**
 * Tiger with rewards in [0, 1].
 *
 * # Safety
 * `out` must be a valid pointer to writable storage.
 */
enum PacStatus pac_model_tiger(double listen_accuracy, size_t horizon, struct PacModel **out);

/**
 * Seeded random model that passes validation.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage.
 */
enum PacStatus pac_model_random(size_t states,
                                size_t actions,
                                size_t observations,
                                size_t horizon,
                                uint64_t seed,
                                struct PacModel **out);

/**
 * Parses a model document.
 *
 * # Safety
 * `json` must be a nul-terminated string and `out` valid for writing.
 */
enum PacStatus pac_model_from_json(const char *json, struct PacModel **out);

/**
 * Serializes a model; release the result with `pac_string_free`.
 *
 * # Safety
 * `model` must come from this library; `out` must be valid for writing.
 */
enum PacStatus pac_model_to_json(const struct PacModel *model, char **out);

/**
 * # Safety
 * `s` must be null or a string returned by this library, freed once.
 */
void pac_string_free(char *s);

/**
 * # Safety
 * `model` must be null or a handle from this library, freed once.
 */
void pac_model_free(struct PacModel *model);

/**
 * Writes the state, action and observation counts and the horizon.
 *
 * # Safety
 * `model` must come from this library; the outputs must be valid for writing.
 */
enum PacStatus pac_model_dims(const struct PacModel *model,
                              size_t *states,
                              size_t *actions,
                              size_t *observations,
                              size_t *horizon);

/**
 * Checks the identifiability conditions under uniform exploration; `passed`
 * is set to 1 or 0. Failure details are not an error.
 *
 * # Safety
 * `model` must come from this library; `passed` must be valid for writing.
 */
enum PacStatus pac_model_validate(const struct PacModel *model, double floor, int *passed);

/**
 * Optimal expected return from the initial belief.
 *
 * # Safety
 * `model` must come from this library; `out` must be valid for writing.
 */
enum PacStatus pac_optimal_value(const struct PacModel *model, double *out);

/**
 * Exploration episodes required for an `epsilon`-optimal policy with
 * probability `1 - delta`, with every formula constant at 1.
 *
 * # Safety
 * `model` must come from this library; `out` must be valid for writing.
 */
enum PacStatus pac_required_episodes(const struct PacModel *model,
                                     double epsilon,
                                     double delta,
                                     uint64_t *out);

/**
 * Bound on the value gap of any policy between `truth` and `estimate`,
 * after matching the estimate's latent labels to the truth.
 *
 * # Safety
 * Both models must come from this library; `out` must be valid for writing.
 */
enum PacStatus pac_simulation_gap_bound(const struct PacModel *truth,
                                        const struct PacModel *estimate,
                                        double *out);

/**
 * Explores `env` for `episodes` episodes (ignored when `population` is
 * nonzero), estimates, plans and scores the plan. Writes the regret and the
 * largest entry error of the matched estimate; either output may be null.
 * When `estimate` is non-null it receives a new handle to the estimated
 * model.
 *
 * # Safety
 * `env` must come from this library; non-null outputs must be valid for
 * writing.
 */
enum PacStatus pac_run_pipeline(const struct PacModel *env,
                                uint64_t episodes,
                                uint64_t seed,
                                int population,
                                double *regret,
                                double *max_entry_error,
                                struct PacModel **estimate);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PACPOMDP_H */
