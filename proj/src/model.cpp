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

#include "bps/model.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

namespace bps {

TabularModel::TabularModel(int num_states, int num_actions)
    : num_states_(num_states), num_actions_(num_actions) {
  const size_t sa = static_cast<size_t>(num_states) * num_actions;
  counts_.assign(sa * num_states, 0);
  sa_counts_.assign(sa, 0);
  trans_.assign(sa * num_states, 0.0);
  reward_.assign(sa, 0.0);
}

double TabularModel::transition(int s, int a, int next) const {
  if (sa_counts_[sa_index(s, a)] == 0) {
    // Unvisited pair: conservative self-transition, reward 0.
    return next == s ? 1.0 : 0.0;
  }
  return trans_[sas_index(s, a, next)];
}

double TabularModel::reward(int s, int a) const {
  return sa_counts_[sa_index(s, a)] == 0 ? 0.0 : reward_[sa_index(s, a)];
}

double TabularModel::q_value(int t, int s, int a) const {
  if (t > horizon_) return 0.0;
  return q_[(static_cast<size_t>(t) * num_states_ + s) * num_actions_ + a];
}

double TabularModel::v_value(int t, int s) const {
  if (t > horizon_) return 0.0;
  return v_[static_cast<size_t>(t) * num_states_ + s];
}

TabularModel fit_tabular_model(const std::vector<Trajectory>& trajs,
                               int num_states, int num_actions) {
  if (trajs.empty()) {
    throw std::invalid_argument("cannot fit a model from zero trajectories");
  }
  TabularModel model(num_states, num_actions);
  std::vector<double> reward_sums(model.reward_.size(), 0.0);
  for (const Trajectory& traj : trajs) {
    // The successor of the final step is unobserved; stop one short there.
    const int observed =
        std::min(traj.effective_length, traj.length() - 1);
    for (int t = 0; t < observed; ++t) {
      const int s = traj.states[t];
      const int a = traj.actions[t];
      const int next = traj.states[t + 1];
      model.counts_[model.sas_index(s, a, next)] += 1;
      model.sa_counts_[model.sa_index(s, a)] += 1;
      reward_sums[model.sa_index(s, a)] += traj.rewards[t];
    }
  }
  for (int s = 0; s < num_states; ++s) {
    for (int a = 0; a < num_actions; ++a) {
      const long n = model.sa_counts_[model.sa_index(s, a)];
      if (n == 0) continue;
      for (int next = 0; next < num_states; ++next) {
        model.trans_[model.sas_index(s, a, next)] =
            static_cast<double>(model.counts_[model.sas_index(s, a, next)]) /
            static_cast<double>(n);
      }
      model.reward_[model.sa_index(s, a)] =
          reward_sums[model.sa_index(s, a)] / static_cast<double>(n);
    }
  }
  return model;
}

TabularModel exact_model(const TabularMDP& mdp) {
  TabularModel model(mdp.num_states(), mdp.num_actions());
  for (int s = 0; s < mdp.num_states(); ++s) {
    for (int a = 0; a < mdp.num_actions(); ++a) {
      model.sa_counts_[model.sa_index(s, a)] = 1;
      double r = 0.0;
      for (int next = 0; next < mdp.num_states(); ++next) {
        const double p = mdp.transition(s, a, next);
        model.trans_[model.sas_index(s, a, next)] = p;
        r += p * mdp.reward(s, a, next);
      }
      model.reward_[model.sa_index(s, a)] = r;
    }
  }
  return model;
}

TabularModel zero_model(int num_states, int num_actions, int horizon) {
  TabularModel model(num_states, num_actions);
  model.horizon_ = horizon;
  model.q_.assign(static_cast<size_t>(horizon + 1) * num_states * num_actions,
                  0.0);
  model.v_.assign(static_cast<size_t>(horizon + 1) * num_states, 0.0);
  return model;
}

void compute_value_tables(TabularModel& model, const DiscretePolicy& eval_policy,
                          double gamma, int horizon) {
  const int S = model.num_states_;
  const int A = model.num_actions_;
  model.horizon_ = horizon;
  model.q_.assign(static_cast<size_t>(horizon + 1) * S * A, 0.0);
  model.v_.assign(static_cast<size_t>(horizon + 1) * S, 0.0);
  for (int t = horizon; t >= 0; --t) {
    for (int s = 0; s < S; ++s) {
      double v = 0.0;
      for (int a = 0; a < A; ++a) {
        double q = model.reward(s, a);
        if (gamma != 0.0 && t < horizon) {
          double next_v = 0.0;
          if (model.sa_counts_[model.sa_index(s, a)] == 0) {
            next_v = model.v_value(t + 1, s);  // default self-loop
          } else {
            for (int next = 0; next < S; ++next) {
              const double p = model.trans_[model.sas_index(s, a, next)];
              if (p != 0.0) next_v += p * model.v_value(t + 1, next);
            }
          }
          q += gamma * next_v;
        } else if (gamma != 0.0 && t == horizon) {
          // v(horizon + 1, .) = 0; nothing to add.
        }
        model.q_[(static_cast<size_t>(t) * S + s) * A + a] = q;
        v += eval_policy.prob(t, s, a) * q;
      }
      model.v_[static_cast<size_t>(t) * S + s] = v;
    }
  }
}

std::string TabularModel::to_json() const {
  nlohmann::json j;
  j["num_states"] = num_states_;
  j["num_actions"] = num_actions_;
  j["horizon"] = horizon_;
  j["fit_iteration"] = fit_iteration_;
  j["counts"] = counts_;
  j["sa_counts"] = sa_counts_;
  j["transition"] = trans_;
  j["reward"] = reward_;
  j["q"] = q_;
  j["v"] = v_;
  return j.dump();
}

TabularModel TabularModel::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  TabularModel model(j.at("num_states").get<int>(),
                     j.at("num_actions").get<int>());
  model.horizon_ = j.at("horizon").get<int>();
  model.fit_iteration_ = j.at("fit_iteration").get<int>();
  model.counts_ = j.at("counts").get<std::vector<long>>();
  model.sa_counts_ = j.at("sa_counts").get<std::vector<long>>();
  model.trans_ = j.at("transition").get<std::vector<double>>();
  model.reward_ = j.at("reward").get<std::vector<double>>();
  model.q_ = j.at("q").get<std::vector<double>>();
  model.v_ = j.at("v").get<std::vector<double>>();
  return model;
}

}  // namespace bps
