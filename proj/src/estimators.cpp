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

#include "bps/estimators.hpp"

#include <cmath>
#include <cstdio>

namespace bps {

void Dataset::add(const Trajectory& traj) {
  if (traj.behavior_params.empty()) {
    throw std::invalid_argument("dataset entries need behavior parameters");
  }
  if (snapshots_.empty() ||
      snapshots_.back().theta() != traj.behavior_params) {
    snapshots_.emplace_back(num_states_, num_actions_, traj.behavior_params);
  }
  snapshot_of_.push_back(snapshots_.size() - 1);
  trajectories_.push_back(traj);
}

const SoftmaxPolicy& Dataset::behavior(size_t i) const {
  return snapshots_[snapshot_of_[i]];
}

double mc_estimate(const Dataset& dataset, double gamma) {
  if (dataset.empty()) {
    throw std::invalid_argument("estimate of an empty dataset");
  }
  double sum = 0.0;
  for (const Trajectory& traj : dataset.trajectories()) {
    sum += discounted_return(traj, gamma);
  }
  return sum / static_cast<double>(dataset.size());
}

double is_estimate(const Trajectory& traj, const DiscretePolicy& eval,
                   const DiscretePolicy& behavior, double gamma) {
  return discounted_return(traj, gamma) *
         importance_weight(traj, eval, behavior);
}

double is_estimate_dataset(const Dataset& dataset, const DiscretePolicy& eval,
                           double gamma) {
  if (dataset.empty()) {
    throw std::invalid_argument("estimate of an empty dataset");
  }
  double sum = 0.0;
  for (size_t i = 0; i < dataset.size(); ++i) {
    sum += is_estimate(dataset.trajectory(i), eval, dataset.behavior(i), gamma);
  }
  return sum / static_cast<double>(dataset.size());
}

double dr_estimate(const Trajectory& traj, const DiscretePolicy& eval,
                   const DiscretePolicy& behavior, const TabularModel& model,
                   double gamma) {
  if (!model.has_value_tables()) {
    throw std::invalid_argument("DR needs the model's value tables");
  }
  const int L = traj.length() - 1;
  double value = model.v_value(0, traj.states[0]);
  double log_ratio = 0.0;
  double scale = 1.0;
  for (int t = 0; t <= L; ++t) {
    const int s = traj.states[t];
    const int a = traj.actions[t];
    if (t < traj.effective_length) {
      const double pb = behavior.prob(t, s, a);
      if (pb <= 0.0) {
        throw SupportViolationError("behavior policy has zero support");
      }
      log_ratio += eval.log_prob(t, s, a) - std::log(pb);
    }
    // Past absorption delta_t vanishes (reward 0, terminal model values 0),
    // so the frozen cumulative ratio is immaterial there.
    const double next_v =
        (t + 1 <= L) ? model.v_value(t + 1, traj.states[t + 1]) : 0.0;
    const double delta =
        traj.rewards[t] - model.q_value(t, s, a) + gamma * next_v;
    if (delta != 0.0) {
      value += scale * std::exp(log_ratio) * delta;
    }
    scale *= gamma;
  }
  return value;
}

double dr_estimate_dataset(const Dataset& dataset, const DiscretePolicy& eval,
                           const TabularModel& model, double gamma) {
  if (dataset.empty()) {
    throw std::invalid_argument("estimate of an empty dataset");
  }
  double sum = 0.0;
  for (size_t i = 0; i < dataset.size(); ++i) {
    sum += dr_estimate(dataset.trajectory(i), eval, dataset.behavior(i), model,
                       gamma);
  }
  return sum / static_cast<double>(dataset.size());
}

double ase_estimate(const Dataset& dataset, const TabularModel& model,
                    double gamma) {
  if (dataset.empty()) {
    throw std::invalid_argument("estimate of an empty dataset");
  }
  if (!model.has_value_tables()) {
    throw std::invalid_argument("ASE needs the model's value tables");
  }
  double sum = 0.0;
  for (const Trajectory& traj : dataset.trajectories()) {
    double value = 0.0;
    double scale = 1.0;
    for (int t = 0; t < traj.length(); ++t) {
      const int s = traj.states[t];
      value += scale * (traj.rewards[t] -
                        model.q_value(t, s, traj.actions[t]) +
                        model.v_value(t, s));
      scale *= gamma;
    }
    sum += value;
  }
  return sum / static_cast<double>(dataset.size());
}

std::string EstimateSeries::to_csv() const {
  std::string out = "# bps-lab v0.1.0\niteration,estimate,sq_moment,theta_id,seed\n";
  char buf[128];
  for (const EstimateRecord& rec : records) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%d,%llu\n", rec.iteration,
                  rec.estimate, rec.sq_moment, rec.theta_id,
                  static_cast<unsigned long long>(rec.seed));
    out += buf;
  }
  return out;
}

}  // namespace bps
