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

#include "bps/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "json.hpp"

namespace bps {

std::vector<double> DiscretePolicy::action_probabilities(int t,
                                                         int state) const {
  std::vector<double> probs(num_actions());
  for (int a = 0; a < num_actions(); ++a) probs[a] = prob(t, state, a);
  return probs;
}

SoftmaxPolicy::SoftmaxPolicy(int num_states, int num_actions,
                             std::vector<double> theta)
    : num_states_(num_states),
      num_actions_(num_actions),
      theta_(std::move(theta)) {
  if (theta_.size() != static_cast<size_t>(num_states) * num_actions) {
    throw std::invalid_argument("softmax theta size mismatch");
  }
  probs_.resize(theta_.size());
  log_probs_.resize(theta_.size());
  for (int s = 0; s < num_states_; ++s) {
    const size_t row = static_cast<size_t>(s) * num_actions_;
    double max_logit = theta_[row];
    for (int a = 1; a < num_actions_; ++a) {
      max_logit = std::max(max_logit, theta_[row + a]);
    }
    double z = 0.0;
    for (int a = 0; a < num_actions_; ++a) {
      z += std::exp(theta_[row + a] - max_logit);
    }
    const double log_z = std::log(z);
    for (int a = 0; a < num_actions_; ++a) {
      log_probs_[row + a] = theta_[row + a] - max_logit - log_z;
      probs_[row + a] = std::exp(log_probs_[row + a]);
    }
  }
}

SoftmaxPolicy SoftmaxPolicy::uniform(int num_states, int num_actions) {
  return SoftmaxPolicy(
      num_states, num_actions,
      std::vector<double>(static_cast<size_t>(num_states) * num_actions, 0.0));
}

std::vector<double> SoftmaxPolicy::score(int state, int action) const {
  std::vector<double> grad(theta_.size(), 0.0);
  accumulate_score(state, action, 1.0, grad);
  return grad;
}

void SoftmaxPolicy::accumulate_score(int state, int action, double coeff,
                                     std::vector<double>& grad) const {
  const size_t row = static_cast<size_t>(state) * num_actions_;
  for (int a = 0; a < num_actions_; ++a) {
    grad[row + a] += coeff * ((a == action ? 1.0 : 0.0) - probs_[row + a]);
  }
}

std::string SoftmaxPolicy::to_json() const {
  nlohmann::json j;
  j["type"] = "softmax";
  j["num_states"] = num_states_;
  j["num_actions"] = num_actions_;
  j["theta"] = theta_;
  return j.dump(2);
}

SoftmaxPolicy SoftmaxPolicy::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  if (j.value("type", "softmax") != "softmax") {
    throw std::invalid_argument("not a softmax policy fixture");
  }
  return SoftmaxPolicy(j.at("num_states").get<int>(),
                       j.at("num_actions").get<int>(),
                       j.at("theta").get<std::vector<double>>());
}

TimeDependentPolicy::TimeDependentPolicy(int horizon, int num_states,
                                         int num_actions)
    : horizon_(horizon), num_states_(num_states), num_actions_(num_actions) {
  probs_.assign(static_cast<size_t>(horizon + 1) * num_states * num_actions,
                0.0);
}

void TimeDependentPolicy::set_prob(int t, int state, int action, double p) {
  probs_[index(t, state, action)] = p;
}

void TimeDependentPolicy::normalize_rows() {
  for (int t = 0; t <= horizon_; ++t) {
    for (int s = 0; s < num_states_; ++s) {
      double sum = 0.0;
      for (int a = 0; a < num_actions_; ++a) sum += probs_[index(t, s, a)];
      if (sum <= 0.0) {
        // No mass recorded at (t, s); fall back to uniform.
        for (int a = 0; a < num_actions_; ++a) {
          probs_[index(t, s, a)] = 1.0 / num_actions_;
        }
      } else {
        for (int a = 0; a < num_actions_; ++a) probs_[index(t, s, a)] /= sum;
      }
    }
  }
}

double TimeDependentPolicy::prob(int t, int state, int action) const {
  if (t > horizon_) t = horizon_;
  return probs_[index(t, state, action)];
}

double TimeDependentPolicy::log_prob(int t, int state, int action) const {
  const double p = prob(t, state, action);
  if (p <= 0.0) {
    throw SupportViolationError("time-dependent policy has zero support");
  }
  return std::log(p);
}

double TrajectoryTreePolicy::trajectory_weight(const Trajectory& traj) const {
  double weight = 1.0;
  int node_id = root();
  for (int t = 0; t < traj.effective_length; ++t) {
    const Node& n = nodes_[node_id];
    const int a = traj.actions[t];
    if (n.action_probs.empty() || n.action_probs[a] <= 0.0 ||
        n.children[a] < 0) {
      throw SupportViolationError("trajectory outside tree-policy support");
    }
    weight *= n.action_probs[a];
    node_id = n.children[a];
  }
  return weight;
}

Trajectory TrajectoryTreePolicy::sample(const TabularMDP& mdp,
                                        uint64_t seed) const {
  Xoshiro256 rng(seed);
  const int steps = mdp.horizon() + 1;
  Trajectory traj;
  traj.states.resize(steps);
  traj.actions.assign(steps, 0);
  traj.rewards.assign(steps, 0.0);

  int s = mdp.start_state();
  int node_id = root();
  for (int t = 0; t < steps; ++t) {
    traj.states[t] = s;
    if (mdp.is_terminal(s)) continue;
    const Node& n = nodes_[node_id];
    const int a = rng.categorical(n.action_probs);
    int next = s;
    // Deterministic MDP: take the single successor.
    for (int cand = 0; cand < mdp.num_states(); ++cand) {
      if (mdp.transition(s, a, cand) > 0.0) {
        next = cand;
        break;
      }
    }
    traj.actions[t] = a;
    traj.rewards[t] = mdp.reward(s, a, next);
    traj.effective_length = t + 1;
    node_id = n.children[a];
    s = next;
  }
  return traj;
}

TimeDependentPolicy TrajectoryTreePolicy::to_time_dependent(
    const TabularMDP& mdp) const {
  TimeDependentPolicy out(mdp.horizon(), mdp.num_states(), num_actions_);
  // Accumulate reach-mass-weighted action masses per (t, state).
  struct Item {
    int node;
    int t;
    double mass;
  };
  std::vector<Item> stack{{root(), 0, 1.0}};
  while (!stack.empty()) {
    Item item = stack.back();
    stack.pop_back();
    const Node& n = nodes_[item.node];
    if (n.action_probs.empty()) continue;
    for (int a = 0; a < num_actions_; ++a) {
      const double m = item.mass * n.action_probs[a];
      if (m <= 0.0 || n.children[a] < 0) continue;
      out.set_prob(item.t, n.state, a, out.prob(item.t, n.state, a) + m);
      stack.push_back({n.children[a], item.t + 1, m});
    }
  }
  out.normalize_rows();
  return out;
}

double log_trajectory_weight(const DiscretePolicy& policy,
                             const Trajectory& traj) {
  double log_w = 0.0;
  for (int t = 0; t < traj.effective_length; ++t) {
    log_w += policy.log_prob(t, traj.states[t], traj.actions[t]);
  }
  return log_w;
}

double trajectory_weight(const DiscretePolicy& policy, const Trajectory& traj) {
  return std::exp(log_trajectory_weight(policy, traj));
}

double importance_weight(const Trajectory& traj, const DiscretePolicy& eval,
                         const DiscretePolicy& behavior,
                         std::optional<int> upto_t) {
  int limit = traj.effective_length - 1;
  if (upto_t.has_value()) limit = std::min(limit, *upto_t);
  double log_ratio = 0.0;
  for (int t = 0; t <= limit; ++t) {
    const int s = traj.states[t];
    const int a = traj.actions[t];
    const double pb = behavior.prob(t, s, a);
    if (pb <= 0.0) {
      throw SupportViolationError("behavior policy has zero support");
    }
    log_ratio += eval.log_prob(t, s, a) - std::log(pb);
  }
  return std::exp(log_ratio);
}

// --- Gaussian policy -------------------------------------------------------

GaussianPolicy::GaussianPolicy(int feature_dim, int action_dim,
                               std::vector<double> params)
    : feature_dim_(feature_dim),
      action_dim_(action_dim),
      params_(std::move(params)) {
  const size_t expected =
      static_cast<size_t>(action_dim) * feature_dim + action_dim;
  if (params_.size() != expected) {
    throw std::invalid_argument("gaussian parameter size mismatch");
  }
}

GaussianPolicy GaussianPolicy::zero(int feature_dim, int action_dim) {
  return GaussianPolicy(
      feature_dim, action_dim,
      std::vector<double>(
          static_cast<size_t>(action_dim) * feature_dim + action_dim, 0.0));
}

double GaussianPolicy::std_dev(int d) const {
  return std::exp(params_[static_cast<size_t>(action_dim_) * feature_dim_ + d]);
}

std::vector<double> GaussianPolicy::mean(std::span<const double> features) const {
  std::vector<double> mu(action_dim_, 0.0);
  for (int d = 0; d < action_dim_; ++d) {
    const size_t row = static_cast<size_t>(d) * feature_dim_;
    for (int f = 0; f < feature_dim_; ++f) {
      mu[d] += params_[row + f] * features[f];
    }
  }
  return mu;
}

double GaussianPolicy::log_density(std::span<const double> features,
                                   std::span<const double> action) const {
  const std::vector<double> mu = mean(features);
  double log_p = 0.0;
  for (int d = 0; d < action_dim_; ++d) {
    const double sigma = std_dev(d);
    const double z = (action[d] - mu[d]) / sigma;
    log_p += -0.5 * z * z - std::log(sigma) -
             0.5 * std::log(2.0 * std::numbers::pi);
  }
  return log_p;
}

std::vector<double> GaussianPolicy::sample_action(
    std::span<const double> features, Xoshiro256& rng) const {
  const std::vector<double> mu = mean(features);
  std::vector<double> action(action_dim_);
  for (int d = 0; d < action_dim_; ++d) {
    action[d] = mu[d] + std_dev(d) * rng.normal();
  }
  return action;
}

std::vector<double> GaussianPolicy::score(std::span<const double> features,
                                          std::span<const double> action) const {
  const std::vector<double> mu = mean(features);
  std::vector<double> grad(params_.size(), 0.0);
  for (int d = 0; d < action_dim_; ++d) {
    const double sigma = std_dev(d);
    const double z = (action[d] - mu[d]) / sigma;
    const size_t row = static_cast<size_t>(d) * feature_dim_;
    for (int f = 0; f < feature_dim_; ++f) {
      grad[row + f] = (z / sigma) * features[f];
    }
    grad[static_cast<size_t>(action_dim_) * feature_dim_ + d] = z * z - 1.0;
  }
  return grad;
}

double GaussianPolicy::log_trajectory_weight(
    const ContinuousTrajectory& traj) const {
  double log_w = 0.0;
  for (size_t t = 0; t < traj.actions.size(); ++t) {
    log_w += log_density(traj.states[t], traj.actions[t]);
  }
  return log_w;
}

ContinuousTrajectory LinearGaussianDomain::sample(const GaussianPolicy& policy,
                                                  uint64_t seed) const {
  Xoshiro256 rng(seed);
  ContinuousTrajectory traj;
  double x = start;
  for (int t = 0; t <= horizon; ++t) {
    const std::vector<double> phi = features(x);
    const std::vector<double> a = policy.sample_action(phi, rng);
    const double reward = -(state_cost * x * x + action_cost * a[0] * a[0]);
    traj.states.push_back(phi);
    traj.actions.push_back(a);
    traj.rewards.push_back(reward);
    x = decay * x + a[0];
  }
  return traj;
}

double LinearGaussianDomain::discounted_return(
    const ContinuousTrajectory& traj) const {
  double total = 0.0;
  for (double r : traj.rewards) total += r;
  return total;
}

}  // namespace bps
