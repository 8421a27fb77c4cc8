/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef DEMON_H
#define DEMON_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DemonStatus {
  DEMON_STATUS_OK = 0,
  DEMON_STATUS_NULL_ARGUMENT = 1,
  DEMON_STATUS_INVALID_UTF8 = 2,
  DEMON_STATUS_INVALID_CONFIG = 3,
  DEMON_STATUS_REWARD = 4,
  DEMON_STATUS_ENGINE = 5,
  DEMON_STATUS_BUFFER_TOO_SMALL = 6,
  DEMON_STATUS_PANIC = 7,
} DemonStatus;

/**
 * A mixture model.
 */
typedef struct DemonModel DemonModel;

/**
 * A model, sampler settings and a reward source, ready to draw trajectories.
 */
typedef struct DemonSampler DemonSampler;

/**
 * A recorded trajectory.
 */
typedef struct DemonTrajectory DemonTrajectory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * The message of the last failure on this thread, or an empty string. Valid
 * until the next call into the library on this thread.
 */
const char *demon_last_error(void);

/**
 * Releases a string returned by the library.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void demon_string_free(char *s);

/**
 * Loads `benchmark:2d`, `benchmark:8d`, or a mixture JSON file.
 *
 * # Safety
 * `reference` must be a NUL-terminated string; `out` must be writable.
 */
enum DemonStatus demon_model_load(const char *reference, struct DemonModel **out);

/**
 * Parses a mixture model from JSON text.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum DemonStatus demon_model_from_json(const char *json, struct DemonModel **out);

/**
 * Data dimension `N`; 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t demon_model_dim(const struct DemonModel *model);

/**
 * # Safety
 * `model` must be null or a live handle, not used afterwards.
 */
void demon_model_free(struct DemonModel *model);

/**
 * Builds a sampler. `config_json` holds sampler settings (null for the
 * defaults); `reward` is a preset name, an `http(s)://` endpoint, or a JSON
 * reward source or spec, and may be null for kind `none`.
 *
 * # Safety
 * `model` must be a live handle; strings must be null or NUL-terminated;
 * `out` must be writable.
 */
enum DemonStatus demon_sampler_new(const struct DemonModel *model,
                                   const char *config_json,
                                   const char *reward,
                                   struct DemonSampler **out);

/**
 * # Safety
 * `sampler` must be null or a live handle, not used afterwards.
 */
void demon_sampler_free(struct DemonSampler *sampler);

/**
 * Draws one trajectory with the given seed.
 *
 * # Safety
 * `sampler` must be a live handle; `out` must be writable.
 */
enum DemonStatus demon_sample(const struct DemonSampler *sampler,
                              uint64_t seed,
                              struct DemonTrajectory **out);

/**
 * Number of recorded steps; 0 for a null handle.
 *
 * # Safety
 * `traj` must be null or a live handle.
 */
size_t demon_trajectory_steps(const struct DemonTrajectory *traj);

/**
 * Reward queries spent; 0 for a null handle.
 *
 * # Safety
 * `traj` must be null or a live handle.
 */
size_t demon_trajectory_reward_queries(const struct DemonTrajectory *traj);

/**
 * Copies the final state into `out`, which must hold at least `len` values.
 *
 * # Safety
 * `traj` must be a live handle; `out` must be writable for `len` values.
 */
enum DemonStatus demon_trajectory_final_state(const struct DemonTrajectory *traj,
                                              double *out,
                                              size_t len);

/**
 * Final reward, or NaN for sources without scalar rewards.
 *
 * # Safety
 * `traj` must be a live handle; `out` must be writable.
 */
enum DemonStatus demon_trajectory_final_reward(const struct DemonTrajectory *traj, double *out);

/**
 * The full trajectory as JSON; release with [`demon_string_free`].
 *
 * # Safety
 * `traj` must be a live handle; `out` must be writable.
 */
enum DemonStatus demon_trajectory_to_json(const struct DemonTrajectory *traj, char **out);

/**
 * Parses a trajectory written by [`demon_trajectory_to_json`].
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum DemonStatus demon_trajectory_from_json(const char *json, struct DemonTrajectory **out);

/**
 * Re-runs the recorded noises and writes the reproduced final state; fails
 * with `Engine` when the records do not reproduce the stored final state.
 *
 * # Safety
 * Handles must be live; `out` must be writable for `len` values.
 */
enum DemonStatus demon_trajectory_replay(const struct DemonModel *model,
                                         const struct DemonTrajectory *traj,
                                         double *out,
                                         size_t len);

/**
 * # Safety
 * `traj` must be null or a live handle, not used afterwards.
 */
void demon_trajectory_free(struct DemonTrajectory *traj);

/**
 * `z* = sqrt(n) normalized(sum_k w_k z_k)` for `k` row-major noises of
 * length `n`, written to `out` (length `n`).
 *
 * # Safety
 * `noises` must hold `k * n` values, `weights` `k`, and `out` `n`.
 */
enum DemonStatus demon_synthesize_noise(const double *noises,
                                        size_t k,
                                        size_t n,
                                        const double *weights,
                                        double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DEMON_H */
