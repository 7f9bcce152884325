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

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "bps/estimators.hpp"
#include "bps/mdp.hpp"
#include "bps/model.hpp"
#include "bps/policy.hpp"

namespace bps {

enum class EstimatorKind { IS, DR };
enum class ModelMode { Fixed, Update };

struct BPGConfig {
  std::vector<double> eval_theta;
  int batch_size = 100;
  // Constant step size unless a full per-iteration schedule is given.
  double step_size = 1e-5;
  std::vector<double> step_schedule;
  int iterations = 1000;
  bool baseline_enabled = true;
  uint64_t root_seed = 0;
  EstimatorKind estimator = EstimatorKind::IS;
  ModelMode model_mode = ModelMode::Fixed;
  int warmup_iterations = 10;  // on-policy model-building phase (DR only)
  bool zero_model = false;     // diagnostic: DR with q = v = 0
  double divergence_factor = 1e6;

  double step(int i) const {
    return step_schedule.empty() ? step_size : step_schedule[i];
  }
  void validate() const;
};

struct GradientEstimate {
  std::vector<double> gradient;
  double batch_sq_moment = 0.0;
  double baseline = 0.0;
};

struct BPGResult {
  std::vector<double> final_theta;
  EstimateSeries series;
  Dataset dataset;
  bool diverged = false;
  int diverged_at = -1;
};

struct DRBPGResult {
  BPGResult run;
  TabularModel model;
};

// Sample MSE gradient of the IS estimator:
// (1/k) sum_H (-IS(H)^2 - baseline) * sum_t score(S_t, A_t), every H from
// the behavior policy. Descent direction; with baseline 0 this is the exact
// sample form of the IS variance-gradient expectation.
GradientEstimate is_mse_gradient(const std::vector<Trajectory>& batch,
                                 const SoftmaxPolicy& behavior,
                                 const SoftmaxPolicy& eval, double gamma,
                                 double baseline = 0.0);

// Sample MSE gradient of the DR estimator:
// (1/k) sum_H [ DR(H)^2 sum_t score_t
//             - 2 DR(H) sum_t gamma^t delta_t (w_e,t/w_b,t) sum_{i<=t} score_i ]
// with delta_t = R_t - q(t, S_t, A_t) + gamma v(t+1, S_{t+1}).
GradientEstimate dr_mse_gradient(const std::vector<Trajectory>& batch,
                                 const SoftmaxPolicy& behavior,
                                 const SoftmaxPolicy& eval,
                                 const TabularModel& model, double gamma);

// Mean of squared per-trajectory OPE values over a batch; the diagnostic /
// early-stopping signal.
double uncentered_second_moment(const std::vector<Trajectory>& batch,
                                const SoftmaxPolicy& behavior,
                                const SoftmaxPolicy& eval, double gamma,
                                EstimatorKind kind,
                                const TabularModel* model = nullptr);

// Behavior policy gradient: starts on-policy (theta_0 = eval_theta), each
// iteration samples batch_size trajectories from the current behavior
// policy, records the running IS dataset estimate, and descends the IS
// variance gradient. Aborts with diverged status if the batch second
// moment exceeds divergence_factor times its initial value.
BPGResult bpg_run(const TabularMDP& mdp, const BPGConfig& config);

// DR variant: iterations [0, warmup) stay on-policy collecting model data
// (estimates are advantage-sum values); Fixed mode freezes the model after
// warmup, Update mode refits it from all data every iteration. Gradient
// updates begin at the warmup boundary.
DRBPGResult dr_bpg_run(const TabularMDP& mdp, const BPGConfig& config);

// REINFORCE (batch form, mean-return baseline), used to generate the
// evaluation policies. Returns the parameters after `iterations` updates.
std::vector<double> reinforce_run(const TabularMDP& mdp,
                                  const std::vector<double>& init_theta,
                                  double step_size, int iterations,
                                  int batch_size, uint64_t seed);

// REINFORCE from the uniform policy with the two stopping rules: pi2 is
// the converged policy (exact value change < 0.1 over 50 iterations), pi1
// the first iterate whose exact value reaches 50% of pi2's.
struct EvalPolicyPair {
  std::vector<double> pi1;
  std::vector<double> pi2;
  double value_pi1 = 0.0;
  double value_pi2 = 0.0;
};
EvalPolicyPair generate_eval_policies(const TabularMDP& mdp, uint64_t seed,
                                      double step_size = 0.05,
                                      int batch_size = 20,
                                      int max_iterations = 4000);

// Zero-variance behavior policy for deterministic MDPs with positive
// returns: trajectory mass g(H) w_e(H) / rho(pi_e) distributed node by
// node over the deterministic trajectory tree. Preconditions violated ->
// std::domain_error.
TrajectoryTreePolicy optimal_behavior_policy(const TabularMDP& mdp,
                                             const DiscretePolicy& eval,
                                             size_t max_paths = 1000000);

// --- Exact enumeration oracles -------------------------------------------

// E[IS^2] - rho^2 under behavior theta, by exhaustive enumeration.
double exact_is_variance(const TabularMDP& mdp, const SoftmaxPolicy& behavior,
                         const SoftmaxPolicy& eval);

// Exact expectation of the IS (or DR) estimator under a behavior policy.
double exact_is_expectation(const TabularMDP& mdp, const SoftmaxPolicy& behavior,
                            const SoftmaxPolicy& eval);
double exact_dr_expectation(const TabularMDP& mdp, const SoftmaxPolicy& behavior,
                            const SoftmaxPolicy& eval,
                            const TabularModel& model);

double exact_dr_mse(const TabularMDP& mdp, const SoftmaxPolicy& behavior,
                    const SoftmaxPolicy& eval, const TabularModel& model);

// Enumeration-weighted expectations of the IS and DR gradient
// integrands (exact gradients of the exact MSE).
std::vector<double> exact_is_mse_gradient(const TabularMDP& mdp,
                                          const SoftmaxPolicy& behavior,
                                          const SoftmaxPolicy& eval);
std::vector<double> exact_dr_mse_gradient(const TabularMDP& mdp,
                                          const SoftmaxPolicy& behavior,
                                          const SoftmaxPolicy& eval,
                                          const TabularModel& model);

// Central finite differences of the exact IS MSE (or DR MSE) w.r.t. the
// behavior parameters; the independent check on the analytic gradients.
std::vector<double> exact_is_mse_fd_gradient(const TabularMDP& mdp,
                                             const SoftmaxPolicy& behavior,
                                             const SoftmaxPolicy& eval,
                                             double step = 1e-5);
std::vector<double> exact_dr_mse_fd_gradient(const TabularMDP& mdp,
                                             const SoftmaxPolicy& behavior,
                                             const SoftmaxPolicy& eval,
                                             const TabularModel& model,
                                             double step = 1e-5);

// Exact REINFORCE gradient of rho(pi_theta) by enumeration (test oracle).
std::vector<double> exact_return_gradient(const TabularMDP& mdp,
                                          const SoftmaxPolicy& policy);

}  // namespace bps
