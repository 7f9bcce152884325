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
#include <functional>
#include <string>
#include <vector>

#include "bps/bpg.hpp"

namespace bps {

inline constexpr const char* kVersionString = "bps-lab v0.1.0";

// Configuration for the experiment commands. JSON mirrors the field names.
struct ExperimentConfig {
  std::string name = "bpg";
  // det4x4 | stoch10x10 | stoch6x6 | stoch6x6_jump | rare_event
  std::string environment = "det4x4";
  double rare_p = 1.0;                  // rare_event transition probability
  // "uniform", "pi1", "pi2", or a path to a policy JSON fixture.
  std::string eval_policy = "pi1";
  uint64_t reinforce_seed = 9001;       // evaluation-policy generation stream

  int batch_size = 100;
  double step_size = 1e-5;
  int iterations = 1000;
  bool baseline_enabled = true;
  std::string estimator = "IS";         // IS | DR
  std::string model_mode = "fixed";     // fixed | update
  int warmup_iterations = 10;
  bool zero_model = false;

  int trials = 100;
  uint64_t seed = 0;
  int workers = 1;
  int holdout = 0;                      // extra final-policy trajectories

  int probe_samples = 10000;
  int probe_repeats = 5;

  std::vector<double> alphas;           // sweep-lr grid
  std::vector<double> rare_probs;       // rare-event p grid

  std::string to_json() const;
  static ExperimentConfig from_json(const std::string& text);
  void validate() const;
};

// Benchmark environment by name. "stoch6x6_jump" is the 6x6 stochastic
// grid plus an action-gated jump (UP at the start state reaches the
// terminal with reward +150 with probability 0.1); the slip noise alone is
// invariant to behavior reweighting, the jump gives the DR estimator an
// action-correlated variance component worth searching over.
TabularMDP make_environment(const std::string& name, double rare_p = 1.0);

// Copy of theta whose start-state row is re-normalized so the given action
// has probability p and the remaining actions keep their relative masses
// (floored at 1e-12 so the softmax parameterization stays finite).
std::vector<double> with_start_action_probability(const TabularMDP& mdp,
                                                  std::vector<double> theta,
                                                  int action, double p);

// Environment/evaluation-policy pair resolved from a config.
struct ResolvedSetup {
  TabularMDP mdp;
  std::vector<double> eval_theta;
  double true_value = 0.0;  // DP oracle rho(pi_e)
};
ResolvedSetup resolve_setup(const ExperimentConfig& config);

// Variance of the one-trajectory estimator under a behavior policy,
// measured with probe_samples trajectories, repeated probe_repeats times
// and averaged. Probe draws come from their own seed stream and never
// enter any dataset.
double variance_probe(const TabularMDP& mdp, const SoftmaxPolicy& behavior,
                      const SoftmaxPolicy& eval, double gamma,
                      EstimatorKind kind, const TabularModel* model,
                      int samples, int repeats, uint64_t probe_seed);

struct GradcheckReport {
  double max_rel_err_is = 0.0;
  double max_rel_err_dr = 0.0;
  double bandit_gradient = 0.0;  // d E[IS^2] / d p1 at p1 = 0.5; exact -3
  int mdps_checked = 0;
  bool passed = false;
  std::string to_json() const;
};

// Randomized enumerable-MDP oracle suite: analytic IS and DR MSE
// gradients against central finite differences of the exact MSE, plus the
// closed-form bandit check. corrupt_score perturbs the analytic gradient
// (negative-control hook for tests).
GradcheckReport run_gradcheck(uint64_t seed, int num_mdps = 6,
                              double tol_is = 1e-6, double tol_dr = 1e-5,
                              bool corrupt_score = false);

struct RunSummary {
  double true_value = 0.0;
  int trials = 0;
  int diverged_trials = 0;
  double mean_initial_variance = 0.0;
  double mean_final_variance = 0.0;
  double mean_final_estimate = 0.0;
  std::string to_json() const;
};

// Writes per-trial EstimateSeries CSVs, final-theta JSON fixtures, an
// aggregate MSE CSV, a variance-probe CSV, and a manifest into out_dir.
RunSummary run_bpg_experiment(const ExperimentConfig& config,
                              const std::string& out_dir);

// Four-arm control-variate comparison (ASE/DR x fixed/update) on a
// stochastic gridworld; emits per-arm MSE curves and a final-variance CSV.
RunSummary run_dr_bpg_experiment(const ExperimentConfig& config,
                                 const std::string& out_dir);

// Variance-reduction curves per step size; diverged runs are flagged in
// the CSV, not fatal.
RunSummary run_sweep_lr_experiment(const ExperimentConfig& config,
                                   const std::string& out_dir);

// Relative variance decrease (v_i - v_f) / v_i per rare-event probability.
// The environment is rare_event with the config's (fixed) jump chance; each
// entry of rare_probs sets the evaluation policy's probability of taking UP
// in the start state, so p controls how rare the high-reward episode is.
RunSummary run_rare_event_experiment(const ExperimentConfig& config,
                                     const std::string& out_dir);

// Deterministic float formatting shared by every CSV writer.
std::string format_double(double value);

// Index-parallel map with a fixed worker count; results must be written by
// index so output is independent of scheduling.
void parallel_for(int count, int workers,
                  const std::function<void(int)>& body);

}  // namespace bps
