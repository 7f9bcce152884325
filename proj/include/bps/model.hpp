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

#include <string>
#include <vector>

#include "bps/mdp.hpp"
#include "bps/policy.hpp"

namespace bps {

// Maximum-likelihood tabular model plus the time-indexed value tables of
// the evaluation policy under that model. Fitted models are immutable
// snapshots; refitting produces a new instance.
class TabularModel {
 public:
  TabularModel(int num_states, int num_actions);

  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }

  // MLE transition probability; unvisited (s, a) default to a
  // self-transition with reward 0 so value tables stay finite.
  double transition(int s, int a, int next) const;
  // Count-weighted mean reward observed at (s, a).
  double reward(int s, int a) const;
  long visit_count(int s, int a) const {
    return sa_counts_[sa_index(s, a)];
  }

  bool has_value_tables() const { return !v_.empty(); }
  int value_horizon() const { return horizon_; }
  // q-hat(t, s, a); zero for t > horizon.
  double q_value(int t, int s, int a) const;
  // v-hat(t, s); zero for t > horizon.
  double v_value(int t, int s) const;

  int fit_iteration() const { return fit_iteration_; }
  void set_fit_iteration(int it) { fit_iteration_ = it; }

  std::string to_json() const;
  static TabularModel from_json(const std::string& text);

  friend TabularModel fit_tabular_model(const std::vector<Trajectory>& trajs,
                                        int num_states, int num_actions);
  friend TabularModel exact_model(const TabularMDP& mdp);
  friend void compute_value_tables(TabularModel& model,
                                   const DiscretePolicy& eval_policy,
                                   double gamma, int horizon);
  friend TabularModel zero_model(int num_states, int num_actions, int horizon);

 private:
  size_t sa_index(int s, int a) const {
    return static_cast<size_t>(s) * num_actions_ + a;
  }
  size_t sas_index(int s, int a, int next) const {
    return sa_index(s, a) * num_states_ + next;
  }

  int num_states_;
  int num_actions_;
  int horizon_ = -1;
  int fit_iteration_ = -1;
  std::vector<long> counts_;      // (s, a, s')
  std::vector<long> sa_counts_;   // (s, a)
  std::vector<double> trans_;     // MLE probabilities
  std::vector<double> reward_;    // mean reward per (s, a)
  std::vector<double> q_;         // (t, s, a), t in [0, horizon]
  std::vector<double> v_;         // (t, s)
};

// Transition and reward MLE from observed steps (padded steps after
// absorption are not observations). Value tables are left empty.
TabularModel fit_tabular_model(const std::vector<Trajectory>& trajs,
                               int num_states, int num_actions);

// The true MDP dynamics cast as a model; reward(s, a) is the
// transition-weighted mean of r(s, a, s').
TabularModel exact_model(const TabularMDP& mdp);

// All-zero model (q-hat = v-hat = 0, self-loop transitions); with it DR
// degenerates to per-decision importance sampling.
TabularModel zero_model(int num_states, int num_actions, int horizon);

// Backward recursion q(t,s,a) = r(s,a) + gamma * sum_s' P(s'|s,a) v(t+1,s'),
// v(t,s) = sum_a pi_e(a|s) q(t,s,a), v(horizon+1, .) = 0.
void compute_value_tables(TabularModel& model, const DiscretePolicy& eval_policy,
                          double gamma, int horizon);

}  // namespace bps
