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
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bps/mdp.hpp"
#include "bps/rng.hpp"

namespace bps {

// A behavior policy assigned probability 0 to an action the evaluation
// policy can take. The policy classes here have full support, so this
// signals a bug rather than a recoverable condition.
struct SupportViolationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Discrete-action policy, possibly time dependent. Policies are immutable
// once constructed and safe to share across sampling workers.
class DiscretePolicy {
 public:
  virtual ~DiscretePolicy() = default;
  virtual int num_actions() const = 0;
  // Probability of action a in state s at timestep t.
  virtual double prob(int t, int state, int action) const = 0;
  virtual double log_prob(int t, int state, int action) const = 0;
  // Full distribution over actions at (t, state).
  virtual std::vector<double> action_probabilities(int t, int state) const;
};

// Tabular softmax policy, pi(a|s) = exp(theta_sa) / sum_a' exp(theta_sa'),
// temperature fixed at 1. Probabilities are precomputed at construction.
class SoftmaxPolicy : public DiscretePolicy {
 public:
  SoftmaxPolicy(int num_states, int num_actions, std::vector<double> theta);
  static SoftmaxPolicy uniform(int num_states, int num_actions);

  int num_states() const { return num_states_; }
  int num_actions() const override { return num_actions_; }
  const std::vector<double>& theta() const { return theta_; }

  double prob(int t, int state, int action) const override {
    (void)t;
    return probs_[static_cast<size_t>(state) * num_actions_ + action];
  }
  double log_prob(int t, int state, int action) const override {
    (void)t;
    return log_probs_[static_cast<size_t>(state) * num_actions_ + action];
  }

  // d/dtheta log pi(a|s): on the state's logit row, 1{a'=a} - pi(a'|s);
  // zero elsewhere.
  std::vector<double> score(int state, int action) const;

  // grad += coeff * score(state, action); touches only one logit row.
  void accumulate_score(int state, int action, double coeff,
                        std::vector<double>& grad) const;

  std::string to_json() const;
  static SoftmaxPolicy from_json(const std::string& text);

 private:
  int num_states_;
  int num_actions_;
  std::vector<double> theta_;
  std::vector<double> probs_;
  std::vector<double> log_probs_;
};

// Explicit per-timestep tabular action distributions, size
// (horizon+1) x num_states x num_actions.
class TimeDependentPolicy : public DiscretePolicy {
 public:
  TimeDependentPolicy(int horizon, int num_states, int num_actions);

  void set_prob(int t, int state, int action, double p);
  void normalize_rows();

  int num_actions() const override { return num_actions_; }
  double prob(int t, int state, int action) const override;
  double log_prob(int t, int state, int action) const override;

 private:
  size_t index(int t, int state, int action) const {
    return (static_cast<size_t>(t) * num_states_ + state) * num_actions_ +
           action;
  }
  int horizon_;
  int num_states_;
  int num_actions_;
  std::vector<double> probs_;
};

// Policy over the deterministic trajectory tree of an MDP: action
// distributions are conditioned on the whole action prefix, not just
// (t, state). Distinct prefixes can reach the same state at the same
// timestep, and the zero-variance construction needs to keep their
// conditionals apart.
class TrajectoryTreePolicy {
 public:
  struct Node {
    int state = 0;
    std::vector<double> action_probs;  // empty at leaves / absorbed nodes
    std::vector<int> children;         // -1 where no mass flows
  };

  explicit TrajectoryTreePolicy(int num_actions) : num_actions_(num_actions) {
    nodes_.push_back(Node{});
  }

  int num_actions() const { return num_actions_; }
  int root() const { return 0; }
  const Node& node(int id) const { return nodes_[id]; }
  Node& mutable_node(int id) { return nodes_[id]; }
  int add_node(int state) {
    nodes_.push_back(Node{state, {}, {}});
    return static_cast<int>(nodes_.size()) - 1;
  }

  // Product of conditional action probabilities along the trajectory's
  // effective length. Throws SupportViolationError if the tree assigns the
  // trajectory no mass.
  double trajectory_weight(const Trajectory& traj) const;

  Trajectory sample(const TabularMDP& mdp, uint64_t seed) const;

  // Mass-weighted merge onto (t, state) tables; exact only when no two
  // prefixes alias to the same (t, state) node with different conditionals.
  TimeDependentPolicy to_time_dependent(const TabularMDP& mdp) const;

 private:
  int num_actions_;
  std::vector<Node> nodes_;
};

// w_pi(H): product of action probabilities along the effective length,
// computed in log-space.
double trajectory_weight(const DiscretePolicy& policy, const Trajectory& traj);
double log_trajectory_weight(const DiscretePolicy& policy,
                             const Trajectory& traj);

// prod_{i=0}^{t} pi_e(A_i|S_i) / pi_b(A_i|S_i), capped at the effective
// length; the full-trajectory weight when upto_t is absent.
double importance_weight(const Trajectory& traj, const DiscretePolicy& eval,
                         const DiscretePolicy& behavior,
                         std::optional<int> upto_t = std::nullopt);

// ---------------------------------------------------------------------------
// Continuous actions: Gaussian policy over linear state features with a
// state-independent diagonal covariance. Parameters are the mean weight
// matrix (action_dim x feature_dim) followed by per-dimension log standard
// deviations, flattened into one vector.

struct ContinuousTrajectory {
  std::vector<std::vector<double>> states;
  std::vector<std::vector<double>> actions;
  std::vector<double> rewards;
};

class GaussianPolicy {
 public:
  GaussianPolicy(int feature_dim, int action_dim, std::vector<double> params);
  static GaussianPolicy zero(int feature_dim, int action_dim);

  int feature_dim() const { return feature_dim_; }
  int action_dim() const { return action_dim_; }
  int num_params() const { return static_cast<int>(params_.size()); }
  const std::vector<double>& params() const { return params_; }

  std::vector<double> mean(std::span<const double> features) const;
  double log_density(std::span<const double> features,
                     std::span<const double> action) const;
  std::vector<double> sample_action(std::span<const double> features,
                                    Xoshiro256& rng) const;

  // Gradient of log density w.r.t. the flattened (mean weights, log_std)
  // parameter vector.
  std::vector<double> score(std::span<const double> features,
                            std::span<const double> action) const;

  double log_trajectory_weight(const ContinuousTrajectory& traj) const;

 private:
  double std_dev(int d) const;
  int feature_dim_;
  int action_dim_;
  std::vector<double> params_;  // [a*F + f] mean weights, then A log stds
};

// Small episodic continuous domain: scalar state, feature map (x, 1),
// deterministic drift x' = decay * x + action, quadratic cost rewards.
// Exists to exercise the continuous-action code paths at desk scale.
struct LinearGaussianDomain {
  int horizon = 5;
  double start = 1.0;
  double decay = 0.8;
  double state_cost = 1.0;
  double action_cost = 0.1;

  std::vector<double> features(double x) const { return {x, 1.0}; }
  ContinuousTrajectory sample(const GaussianPolicy& policy,
                              uint64_t seed) const;
  double discounted_return(const ContinuousTrajectory& traj) const;
};

}  // namespace bps
