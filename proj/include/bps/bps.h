/* Copyright 2026 The bps-lab Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* C API of the bps shared library. All objects are opaque handles, all
 * functions return a bps_status code, and every out-string must be
 * released with bps_string_free. */

#ifndef BPS_BPS_H_
#define BPS_BPS_H_

#include <stdint.h>
#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum bps_status {
  BPS_OK = 0,
  BPS_ERR_INVALID_ARGUMENT = 1,
  BPS_ERR_CAPACITY = 2,
  BPS_ERR_SUPPORT_VIOLATION = 3,
  BPS_ERR_DIVERGED = 4,
  BPS_ERR_TOLERANCE = 5,
  BPS_ERR_IO = 6,
  BPS_ERR_INTERNAL = 7
} bps_status;

typedef struct bps_mdp_t bps_mdp_t;
typedef struct bps_policy_t bps_policy_t;

/* Library version string ("bps-lab vX.Y.Z"); static storage. */
const char* bps_version(void);

/* Human-readable name of a status code; static storage. */
const char* bps_strerror(int status);

/* Detail message of the most recent failure on this thread; static until
 * the next API call on the same thread. */
const char* bps_last_error(void);

void bps_string_free(char* text);

/* --- MDP ---------------------------------------------------------------- */

/* variant: "det4x4", "stoch10x10", "stoch6x6", "stoch6x6_jump", or
 * "rare_event" (rare_p in (0, 1] applies only to rare_event). */
bps_status bps_mdp_create(const char* variant, double rare_p,
                          bps_mdp_t** out_mdp);
bps_status bps_mdp_from_json(const char* json, bps_mdp_t** out_mdp);
bps_status bps_mdp_to_json(const bps_mdp_t* mdp, char** out_json);
bps_status bps_mdp_num_states(const bps_mdp_t* mdp, int* out);
bps_status bps_mdp_num_actions(const bps_mdp_t* mdp, int* out);
void bps_mdp_free(bps_mdp_t* mdp);

/* --- Policies ------------------------------------------------------------ */

/* theta has num_states * num_actions logits; NULL means uniform. */
bps_status bps_policy_softmax(int num_states, int num_actions,
                              const double* theta, bps_policy_t** out_policy);
bps_status bps_policy_from_json(const char* json, bps_policy_t** out_policy);
bps_status bps_policy_to_json(const bps_policy_t* policy, char** out_json);
void bps_policy_free(bps_policy_t* policy);

/* Exact expected discounted return by dynamic programming. */
bps_status bps_policy_value(const bps_mdp_t* mdp, const bps_policy_t* policy,
                            double* out_value);

/* Regenerates the two evaluation policies (partially optimized and
 * converged) with seeded REINFORCE. */
bps_status bps_make_eval_policies(const bps_mdp_t* mdp, uint64_t seed,
                                  bps_policy_t** out_pi1,
                                  bps_policy_t** out_pi2);

/* --- Experiment commands -------------------------------------------------- */

/* command: "gradcheck", "bpg", "dr-bpg", "sweep-lr", or "rare-event".
 * config_json mirrors the CLI config schema. out_dir receives the CSV and
 * manifest files (ignored by gradcheck; may be NULL there). A JSON summary
 * is returned through out_summary_json.
 *
 * Returns BPS_ERR_TOLERANCE when gradcheck exceeds its tolerance and
 * BPS_ERR_DIVERGED when every trial of a run diverged; both still produce
 * a summary. */
bps_status bps_run_command(const char* command, const char* config_json,
                           const char* out_dir, char** out_summary_json);

#ifdef __cplusplus
}
#endif

#endif /* BPS_BPS_H_ */
