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
#include <string>
#include <vector>

#include "bps/mdp.hpp"
#include "bps/model.hpp"
#include "bps/policy.hpp"

namespace bps {

// Trajectories paired with the behavior parameters that produced them.
// Each trajectory is always weighted with its own stored parameters,
// never the current policy.
class Dataset {
 public:
  Dataset(int num_states, int num_actions)
      : num_states_(num_states), num_actions_(num_actions) {}

  void add(const Trajectory& traj);
  size_t size() const { return trajectories_.size(); }
  bool empty() const { return trajectories_.empty(); }
  const Trajectory& trajectory(size_t i) const { return trajectories_[i]; }
  const std::vector<Trajectory>& trajectories() const { return trajectories_; }
  // Behavior policy reconstructed from entry i's stored parameters.
  const SoftmaxPolicy& behavior(size_t i) const;

  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }

 private:
  int num_states_;
  int num_actions_;
  std::vector<Trajectory> trajectories_;
  // Consecutive entries usually share parameters; snapshots are cached so
  // a dataset of n batches holds one policy per distinct theta.
  std::vector<size_t> snapshot_of_;
  std::vector<SoftmaxPolicy> snapshots_;
};

// On-policy Monte Carlo: mean of g(H) over the dataset. Caller asserts the
// dataset is on-policy. Empty dataset throws std::invalid_argument.
double mc_estimate(const Dataset& dataset, double gamma);

// g(H) * w_eval(H) / w_behavior(H), weights in log-space.
double is_estimate(const Trajectory& traj, const DiscretePolicy& eval,
                   const DiscretePolicy& behavior, double gamma);

// Unweighted mean of per-trajectory IS values, each trajectory under its
// own stored behavior parameters.
double is_estimate_dataset(const Dataset& dataset, const DiscretePolicy& eval,
                           double gamma);

// Doubly robust: v(0, S_0) + sum_t gamma^t (w_e,t / w_b,t) *
// (R_t - q(t, S_t, A_t) + gamma * v(t+1, S_{t+1})), v == 0 past the horizon.
double dr_estimate(const Trajectory& traj, const DiscretePolicy& eval,
                   const DiscretePolicy& behavior, const TabularModel& model,
                   double gamma);

double dr_estimate_dataset(const Dataset& dataset, const DiscretePolicy& eval,
                           const TabularModel& model, double gamma);

// Advantage sum, on-policy: mean over trajectories of
// sum_t gamma^t (R_t - q(t, S_t, A_t) + v(t, S_t)).
double ase_estimate(const Dataset& dataset, const TabularModel& model,
                    double gamma);

// Per-iteration record of a behavior policy search run.
struct EstimateRecord {
  int iteration = 0;
  double estimate = 0.0;
  double sq_moment = 0.0;  // mean of OPE^2 over the iteration's batch
  int theta_id = 0;        // behavior snapshot index
  uint64_t seed = 0;       // batch base seed
};

struct EstimateSeries {
  std::vector<EstimateRecord> records;

  // CSV with header "iteration,estimate,sq_moment,theta_id,seed" after the
  // version comment line.
  std::string to_csv() const;
};

}  // namespace bps
