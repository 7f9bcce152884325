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
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace bps {

class DiscretePolicy;

// Raised when exhaustive trajectory enumeration would exceed its guard.
struct CapacityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A fixed-length episode. Sequences always have horizon()+1 entries; once
// the terminal state is reached the remaining entries hold the absorbing
// state with action 0 and reward 0. effective_length is the number of
// actions actually chosen before absorption.
struct Trajectory {
  std::vector<int> states;
  std::vector<int> actions;
  std::vector<double> rewards;
  std::vector<double> behavior_params;  // exactly as used at sampling time
  int effective_length = 0;

  int length() const { return static_cast<int>(states.size()); }
};

// Finite state/action MDP with entry rewards r(s, a, s'), a fixed start
// state, a finite horizon, and absorbing terminal states (self-loop,
// reward 0).
class TabularMDP {
 public:
  TabularMDP(int num_states, int num_actions, int start_state, int horizon,
             double discount);

  void set_transition(int s, int a, int next, double p);
  void set_reward(int s, int a, int next, double r);
  void add_terminal(int s);

  // Checks that every (s, a) row sums to 1 within 1e-12 and that terminal
  // states absorb with reward 0. Throws std::invalid_argument otherwise.
  void validate() const;

  double transition(int s, int a, int next) const {
    return transition_[index(s, a, next)];
  }
  double reward(int s, int a, int next) const {
    return reward_[index(s, a, next)];
  }
  bool is_terminal(int s) const { return terminal_.count(s) > 0; }

  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }
  int start_state() const { return start_state_; }
  int horizon() const { return horizon_; }
  double discount() const { return discount_; }
  const std::set<int>& terminal_states() const { return terminal_; }

  std::string to_json() const;
  static TabularMDP from_json(const std::string& text);

 private:
  size_t index(int s, int a, int next) const {
    return (static_cast<size_t>(s) * num_actions_ + a) * num_states_ + next;
  }

  int num_states_;
  int num_actions_;
  int start_state_;
  int horizon_;
  double discount_;
  std::set<int> terminal_;
  std::vector<double> transition_;
  std::vector<double> reward_;
};

// Benchmark gridworlds. Cells are addressed (col, row) with (0, 0) the
// top-left corner; state index = row * width + col. Actions are
// UP, DOWN, LEFT, RIGHT in that order; moves into a wall do not move the
// agent. Rewards are on entry: +10 into the terminal corner, -10 into
// (1,1), +1 into the bonus cell, -1 otherwise.
enum class GridVariant { Det4x4, Stoch10x10, RareEvent };

inline constexpr int kGridUp = 0;
inline constexpr int kGridDown = 1;
inline constexpr int kGridLeft = 2;
inline constexpr int kGridRight = 3;

// rare_p only applies to RareEvent: with probability rare_p, taking UP in
// the start state jumps to the terminal state with reward +50.
TabularMDP make_gridworld(GridVariant variant, double rare_p = 1.0);
TabularMDP make_gridworld(const std::string& variant, double rare_p = 1.0);

// Square stochastic gridworld of arbitrary side (terminal at the
// bottom-right corner, bonus at (1, side-1)); side=10 is the Stoch10x10
// variant. Used for desk-scale control-variate experiments.
TabularMDP make_stochastic_gridworld(int side);

// Sum of gamma^t R_t over the trajectory's effective length.
double discounted_return(const Trajectory& traj, double gamma);

// One episode from the MDP under the policy, fully determined by seed.
Trajectory sample_trajectory(const TabularMDP& mdp, const DiscretePolicy& policy,
                             uint64_t seed);

// Exact expected discounted return of a policy by backward dynamic
// programming over time-indexed value tables (value depends on the number
// of remaining steps, which gamma=1 horizons require).
double policy_value(const TabularMDP& mdp, const DiscretePolicy& policy);

// Every trajectory of an enumerable MDP together with its policy-free
// probability p(H) = prod_t P(S_{t+1}|S_t, A_t); Pr(H|pi) = p(H) w_pi(H).
struct EnumeratedTrajectorySet {
  std::vector<Trajectory> trajectories;
  std::vector<double> base_probabilities;

  size_t size() const { return trajectories.size(); }
};

EnumeratedTrajectorySet enumerate_trajectories(const TabularMDP& mdp,
                                               size_t max_paths = 1000000);

}  // namespace bps
