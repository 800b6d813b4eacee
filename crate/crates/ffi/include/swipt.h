#ifndef SWIPT_H
#define SWIPT_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SwiptStatus {
  SWIPT_STATUS_OK = 0,
  SWIPT_STATUS_NULL_POINTER = 1,
  SWIPT_STATUS_INVALID_ARGUMENT = 2,
  SWIPT_STATUS_INVALID_CONFIG = 3,
  SWIPT_STATUS_IO = 4,
  SWIPT_STATUS_BUFFER_TOO_SMALL = 5,
  SWIPT_STATUS_PANIC = 6,
} SwiptStatus;

/**
 * Scenario configuration handle.
 */
typedef struct SwiptConfig SwiptConfig;

/**
 * Environment handle.
 */
typedef struct SwiptEnv SwiptEnv;

/**
 * Outcome of [`swipt_train_and_test`].
 */
typedef struct SwiptSummary {
  double mean_eta;
  double mean_reward;
  double h2h_satisfaction;
  double cmtcd_outage;
  double payload_success;
  size_t convergence_episode;
} SwiptSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the last failure on this thread; empty after a
 * success. Valid until the next call on the same thread.
 */
const char *swipt_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *swipt_version(void);

/**
 * Default scenario configuration.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum SwiptStatus swipt_config_default(struct SwiptConfig **out);

/**
 * Configuration read from a `key = value` file; unspecified keys keep
 * their defaults.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` valid for writes.
 */
enum SwiptStatus swipt_config_from_file(const char *path, struct SwiptConfig **out);

/**
 * Set one field by its configuration-file key.
 *
 * # Safety
 * `cfg` must come from this library; `key` and `value` must be
 * NUL-terminated strings.
 */
enum SwiptStatus swipt_config_set(struct SwiptConfig *cfg, const char *key, const char *value);

/**
 * Check every constraint; writes the number of violations to `count`
 * (may be null) and returns `SWIPT_STATUS_INVALID_CONFIG` listing them
 * when there are any.
 *
 * # Safety
 * `cfg` must come from this library; `count` null or valid for writes.
 */
enum SwiptStatus swipt_config_validate(const struct SwiptConfig *cfg, size_t *count);

/**
 * # Safety
 * `cfg` must be null or come from this library and not be used again.
 */
void swipt_config_free(struct SwiptConfig *cfg);

/**
 * Environment over a fixed topology drawn from `seed`. `swipt` false
 * disables power splitting.
 *
 * # Safety
 * `cfg` must come from this library and `out` be valid for writes.
 */
enum SwiptStatus swipt_env_new(const struct SwiptConfig *cfg,
                               bool swipt,
                               uint64_t seed,
                               struct SwiptEnv **out);

/**
 * # Safety
 * `env` must be null or come from this library and not be used again.
 */
void swipt_env_free(struct SwiptEnv *env);

/**
 * Number of learning agents (tolerable links); 0 for a null handle.
 *
 * # Safety
 * `env` must be null or come from this library.
 */
size_t swipt_env_num_agents(const struct SwiptEnv *env);

/**
 * Length of one agent's observation; 0 for a null handle.
 *
 * # Safety
 * `env` must be null or come from this library.
 */
size_t swipt_env_obs_len(const struct SwiptEnv *env);

/**
 * Size of each agent's discrete action set; 0 for a null handle.
 *
 * # Safety
 * `env` must be null or come from this library.
 */
size_t swipt_env_action_count(const struct SwiptEnv *env);

/**
 * Start episode `episode` with exploration rate `epsilon` in the
 * fingerprint; writes `num_agents * obs_len` values, agent-major.
 *
 * # Safety
 * `env` must come from this library; `obs_out` must hold `capacity`
 * doubles.
 */
enum SwiptStatus swipt_env_reset(struct SwiptEnv *env,
                                 size_t episode,
                                 double epsilon,
                                 double *obs_out,
                                 size_t capacity);

/**
 * Apply one action per agent for the current slot. Writes the next
 * observations, the common reward, the slot's energy efficiency and
 * whether the episode ended. `reward`, `eta` and `terminal` may be null.
 *
 * # Safety
 * `env` must come from this library; `actions` must hold `num_actions`
 * values and `obs_out` `capacity` doubles.
 */
enum SwiptStatus swipt_env_step(struct SwiptEnv *env,
                                const size_t *actions,
                                size_t num_actions,
                                double *obs_out,
                                size_t capacity,
                                double *reward,
                                double *eta,
                                bool *terminal);

/**
 * Path loss in dB at `distance_km`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum SwiptStatus swipt_path_loss_db(double distance_km, double *out);

/**
 * `Pr{z1 <= z2 + ... + zn + c}` for independent exponentials with rate
 * `lambda1` for `z1` and `rates[i]` for the rest.
 *
 * # Safety
 * `rates` must hold `n` values (may be null when `n` is 0); `out` must be
 * valid for writes.
 */
enum SwiptStatus swipt_lemma1_probability(double lambda1,
                                          const double *rates,
                                          size_t n,
                                          double c,
                                          double *out);

/**
 * Train `scheme` (`madrl_aspra`, `maql`, `sadrl` or `non_swipt_madrl`)
 * for the configured number of episodes, then test it greedily for
 * `test_episodes` episodes.
 *
 * # Safety
 * `cfg` must come from this library, `scheme` be NUL-terminated and `out`
 * valid for writes.
 */
enum SwiptStatus swipt_train_and_test(const struct SwiptConfig *cfg,
                                      const char *scheme,
                                      uint64_t seed,
                                      size_t test_episodes,
                                      struct SwiptSummary *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SWIPT_H */
