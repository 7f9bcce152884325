// Copyright 2026 The bps-lab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "bps/bps.h"

#include <cstring>
#include <filesystem>
#include <string>

#include "bps/experiments.hpp"

struct bps_mdp_t {
  bps::TabularMDP mdp;
};

struct bps_policy_t {
  bps::SoftmaxPolicy policy;
};

namespace {

thread_local std::string g_last_error;

char* copy_string(const std::string& text) {
  char* out = new char[text.size() + 1];
  std::memcpy(out, text.c_str(), text.size() + 1);
  return out;
}

// Maps the library's exception taxonomy onto status codes. The callable
// does the work; failures land in the thread-local detail message.
template <typename Fn>
bps_status guarded(Fn&& fn) {
  try {
    g_last_error.clear();
    fn();
    return BPS_OK;
  } catch (const bps::CapacityError& e) {
    g_last_error = e.what();
    return BPS_ERR_CAPACITY;
  } catch (const bps::SupportViolationError& e) {
    g_last_error = e.what();
    return BPS_ERR_SUPPORT_VIOLATION;
  } catch (const std::invalid_argument& e) {
    g_last_error = e.what();
    return BPS_ERR_INVALID_ARGUMENT;
  } catch (const std::domain_error& e) {
    g_last_error = e.what();
    return BPS_ERR_INVALID_ARGUMENT;
  } catch (const std::filesystem::filesystem_error& e) {
    g_last_error = e.what();
    return BPS_ERR_IO;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return BPS_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return BPS_ERR_INTERNAL;
  }
}

bps_status invalid(const char* message) {
  g_last_error = message;
  return BPS_ERR_INVALID_ARGUMENT;
}

}  // namespace

extern "C" {

const char* bps_version(void) { return bps::kVersionString; }

const char* bps_strerror(int status) {
  switch (status) {
    case BPS_OK:
      return "ok";
    case BPS_ERR_INVALID_ARGUMENT:
      return "invalid argument";
    case BPS_ERR_CAPACITY:
      return "capacity exceeded";
    case BPS_ERR_SUPPORT_VIOLATION:
      return "support violation";
    case BPS_ERR_DIVERGED:
      return "search diverged";
    case BPS_ERR_TOLERANCE:
      return "tolerance exceeded";
    case BPS_ERR_IO:
      return "io error";
    case BPS_ERR_INTERNAL:
      return "internal error";
    default:
      return "unknown status";
  }
}

const char* bps_last_error(void) { return g_last_error.c_str(); }

void bps_string_free(char* text) { delete[] text; }

bps_status bps_mdp_create(const char* variant, double rare_p,
                          bps_mdp_t** out_mdp) {
  if (variant == nullptr || out_mdp == nullptr) {
    return invalid("variant and out_mdp must be non-NULL");
  }
  return guarded([&] {
    *out_mdp = new bps_mdp_t{bps::make_environment(variant, rare_p)};
  });
}

bps_status bps_mdp_from_json(const char* json, bps_mdp_t** out_mdp) {
  if (json == nullptr || out_mdp == nullptr) {
    return invalid("json and out_mdp must be non-NULL");
  }
  return guarded([&] {
    *out_mdp = new bps_mdp_t{bps::TabularMDP::from_json(json)};
  });
}

bps_status bps_mdp_to_json(const bps_mdp_t* mdp, char** out_json) {
  if (mdp == nullptr || out_json == nullptr) {
    return invalid("mdp and out_json must be non-NULL");
  }
  return guarded([&] { *out_json = copy_string(mdp->mdp.to_json()); });
}

bps_status bps_mdp_num_states(const bps_mdp_t* mdp, int* out) {
  if (mdp == nullptr || out == nullptr) {
    return invalid("mdp and out must be non-NULL");
  }
  *out = mdp->mdp.num_states();
  return BPS_OK;
}

bps_status bps_mdp_num_actions(const bps_mdp_t* mdp, int* out) {
  if (mdp == nullptr || out == nullptr) {
    return invalid("mdp and out must be non-NULL");
  }
  *out = mdp->mdp.num_actions();
  return BPS_OK;
}

void bps_mdp_free(bps_mdp_t* mdp) { delete mdp; }

bps_status bps_policy_softmax(int num_states, int num_actions,
                              const double* theta, bps_policy_t** out_policy) {
  if (out_policy == nullptr) return invalid("out_policy must be non-NULL");
  return guarded([&] {
    std::vector<double> params(static_cast<size_t>(num_states) * num_actions,
                               0.0);
    if (theta != nullptr) {
      params.assign(theta, theta + params.size());
    }
    *out_policy = new bps_policy_t{
        bps::SoftmaxPolicy(num_states, num_actions, std::move(params))};
  });
}

bps_status bps_policy_from_json(const char* json, bps_policy_t** out_policy) {
  if (json == nullptr || out_policy == nullptr) {
    return invalid("json and out_policy must be non-NULL");
  }
  return guarded([&] {
    *out_policy = new bps_policy_t{bps::SoftmaxPolicy::from_json(json)};
  });
}

bps_status bps_policy_to_json(const bps_policy_t* policy, char** out_json) {
  if (policy == nullptr || out_json == nullptr) {
    return invalid("policy and out_json must be non-NULL");
  }
  return guarded([&] { *out_json = copy_string(policy->policy.to_json()); });
}

void bps_policy_free(bps_policy_t* policy) { delete policy; }

bps_status bps_policy_value(const bps_mdp_t* mdp, const bps_policy_t* policy,
                            double* out_value) {
  if (mdp == nullptr || policy == nullptr || out_value == nullptr) {
    return invalid("mdp, policy, and out_value must be non-NULL");
  }
  return guarded(
      [&] { *out_value = bps::policy_value(mdp->mdp, policy->policy); });
}

bps_status bps_make_eval_policies(const bps_mdp_t* mdp, uint64_t seed,
                                  bps_policy_t** out_pi1,
                                  bps_policy_t** out_pi2) {
  if (mdp == nullptr || out_pi1 == nullptr || out_pi2 == nullptr) {
    return invalid("mdp, out_pi1, and out_pi2 must be non-NULL");
  }
  return guarded([&] {
    const bps::EvalPolicyPair pair =
        bps::generate_eval_policies(mdp->mdp, seed);
    const int S = mdp->mdp.num_states();
    const int A = mdp->mdp.num_actions();
    *out_pi1 = new bps_policy_t{bps::SoftmaxPolicy(S, A, pair.pi1)};
    *out_pi2 = new bps_policy_t{bps::SoftmaxPolicy(S, A, pair.pi2)};
  });
}

bps_status bps_run_command(const char* command, const char* config_json,
                           const char* out_dir, char** out_summary_json) {
  if (command == nullptr || config_json == nullptr ||
      out_summary_json == nullptr) {
    return invalid("command, config_json, and out_summary_json are required");
  }
  const std::string cmd(command);
  if (cmd == "gradcheck") {
    bps::GradcheckReport report;
    const bps_status status = guarded([&] {
      const bps::ExperimentConfig config =
          bps::ExperimentConfig::from_json(config_json);
      report = bps::run_gradcheck(config.seed);
      *out_summary_json = copy_string(report.to_json());
    });
    if (status != BPS_OK) return status;
    if (!report.passed) {
      g_last_error = "gradient check exceeded tolerance";
      return BPS_ERR_TOLERANCE;
    }
    return BPS_OK;
  }

  if (out_dir == nullptr) return invalid("out_dir is required");
  bps::RunSummary summary;
  const bps_status status = guarded([&] {
    bps::ExperimentConfig config =
        bps::ExperimentConfig::from_json(config_json);
    if (cmd == "bpg") {
      summary = bps::run_bpg_experiment(config, out_dir);
    } else if (cmd == "dr-bpg") {
      summary = bps::run_dr_bpg_experiment(config, out_dir);
    } else if (cmd == "sweep-lr") {
      summary = bps::run_sweep_lr_experiment(config, out_dir);
    } else if (cmd == "rare-event") {
      summary = bps::run_rare_event_experiment(config, out_dir);
    } else {
      throw std::invalid_argument("unknown command: " + cmd);
    }
    *out_summary_json = copy_string(summary.to_json());
  });
  if (status != BPS_OK) return status;
  if (summary.trials > 0 && summary.diverged_trials == summary.trials) {
    g_last_error = "every trial diverged";
    return BPS_ERR_DIVERGED;
  }
  return BPS_OK;
}

}  // extern "C"
