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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "bps/mdp.hpp"
#include "bps/model.hpp"
#include "bps/policy.hpp"

using namespace bps;

namespace {

TabularMDP make_chain() {
  TabularMDP mdp(3, 2, 0, 2, 0.9);
  for (int s = 0; s < 2; ++s) {
    mdp.set_transition(s, 0, s + 1, 0.7);
    mdp.set_transition(s, 0, s, 0.3);
    mdp.set_reward(s, 0, s + 1, 1.0);
    mdp.set_reward(s, 0, s, -0.5);
    mdp.set_transition(s, 1, s, 1.0);
    mdp.set_reward(s, 1, s, 0.25);
  }
  mdp.set_transition(2, 0, 2, 1.0);
  mdp.set_transition(2, 1, 2, 1.0);
  mdp.add_terminal(2);
  mdp.validate();
  return mdp;
}

// Hand-built two-step trajectories over a 2-state 2-action space.
Trajectory make_traj(std::vector<int> states, std::vector<int> actions,
                     std::vector<double> rewards, int effective) {
  Trajectory traj;
  traj.states = std::move(states);
  traj.actions = std::move(actions);
  traj.rewards = std::move(rewards);
  traj.effective_length = effective;
  return traj;
}

}  // namespace

TEST_CASE("MLE counts and rewards match hand tallies") {
  std::vector<Trajectory> trajs;
  // (0,a0)->1 r=2 then (1,a1)->1 r=1.
  trajs.push_back(make_traj({0, 1, 1}, {0, 1, 0}, {2.0, 1.0, 0.0}, 2));
  // (0,a0)->0 r=4 then (0,a0)->1 r=2.
  trajs.push_back(make_traj({0, 0, 1}, {0, 0, 0}, {4.0, 2.0, 0.0}, 2));
  const TabularModel model = fit_tabular_model(trajs, 2, 2);
  CHECK(model.visit_count(0, 0) == 3);
  CHECK(model.visit_count(1, 1) == 1);
  CHECK(model.transition(0, 0, 1) == doctest::Approx(2.0 / 3.0));
  CHECK(model.transition(0, 0, 0) == doctest::Approx(1.0 / 3.0));
  CHECK(model.transition(1, 1, 1) == doctest::Approx(1.0));
  CHECK(model.reward(0, 0) == doctest::Approx(8.0 / 3.0));
  CHECK(model.reward(1, 1) == doctest::Approx(1.0));
}

TEST_CASE("padded steps after absorption are not observations") {
  // Effective length 1; the trailing entries are padding and must not
  // contribute counts for (1, a0).
  std::vector<Trajectory> trajs;
  trajs.push_back(make_traj({0, 1, 1}, {0, 0, 0}, {3.0, 0.0, 0.0}, 1));
  const TabularModel model = fit_tabular_model(trajs, 2, 2);
  CHECK(model.visit_count(0, 0) == 1);
  CHECK(model.visit_count(1, 0) == 0);
}

TEST_CASE("unvisited pairs default to a self-loop with zero reward") {
  std::vector<Trajectory> trajs;
  trajs.push_back(make_traj({0, 1, 1}, {0, 0, 0}, {1.0, 0.0, 0.0}, 1));
  const TabularModel model = fit_tabular_model(trajs, 2, 2);
  CHECK(model.transition(1, 1, 1) == doctest::Approx(1.0));
  CHECK(model.transition(1, 1, 0) == doctest::Approx(0.0));
  CHECK(model.reward(1, 1) == 0.0);
}

TEST_CASE("exact model reproduces the MDP dynamics") {
  const TabularMDP mdp = make_chain();
  const TabularModel model = exact_model(mdp);
  for (int s = 0; s < 3; ++s) {
    for (int a = 0; a < 2; ++a) {
      double mean_reward = 0.0;
      for (int n = 0; n < 3; ++n) {
        CHECK(model.transition(s, a, n) ==
              doctest::Approx(mdp.transition(s, a, n)).epsilon(1e-15));
        mean_reward += mdp.transition(s, a, n) * mdp.reward(s, a, n);
      }
      CHECK(model.reward(s, a) == doctest::Approx(mean_reward).epsilon(1e-15));
    }
  }
}

TEST_CASE("value tables of the exact model match dynamic programming") {
  const TabularMDP mdp = make_chain();
  const SoftmaxPolicy policy(3, 2, {0.4, -0.2, 0.1, 0.3, 0.0, 0.0});
  TabularModel model = exact_model(mdp);
  compute_value_tables(model, policy, mdp.discount(), mdp.horizon());
  REQUIRE(model.has_value_tables());
  CHECK(model.value_horizon() == mdp.horizon());
  CHECK(model.v_value(0, mdp.start_state()) ==
        doctest::Approx(policy_value(mdp, policy)).epsilon(1e-12));
  // v is the eval-policy mixture of q, and values vanish past the horizon.
  for (int t = 0; t <= mdp.horizon(); t += 25) {
    for (int s = 0; s < 3; ++s) {
      double mix = 0.0;
      for (int a = 0; a < 2; ++a) mix += policy.prob(t, s, a) *
                                         model.q_value(t, s, a);
      CHECK(model.v_value(t, s) == doctest::Approx(mix).epsilon(1e-12));
    }
  }
  CHECK(model.v_value(mdp.horizon() + 1, 0) == 0.0);
  CHECK(model.q_value(mdp.horizon() + 1, 0, 0) == 0.0);
}

TEST_CASE("zero model has null values and self-loop transitions") {
  const TabularModel zero = zero_model(3, 2, 5);
  REQUIRE(zero.has_value_tables());
  for (int t = 0; t <= 5; ++t) {
    for (int s = 0; s < 3; ++s) {
      CHECK(zero.v_value(t, s) == 0.0);
      for (int a = 0; a < 2; ++a) CHECK(zero.q_value(t, s, a) == 0.0);
    }
  }
  CHECK(zero.transition(1, 0, 1) == doctest::Approx(1.0));
}

TEST_CASE("fitted model converges to the true dynamics") {
  const TabularMDP mdp = make_chain();
  const SoftmaxPolicy uniform = SoftmaxPolicy::uniform(3, 2);
  std::vector<Trajectory> trajs;
  for (uint64_t i = 0; i < 4000; ++i) {
    trajs.push_back(sample_trajectory(mdp, uniform, i));
  }
  const TabularModel model = fit_tabular_model(trajs, 3, 2);
  CHECK(model.transition(0, 0, 1) == doctest::Approx(0.7).epsilon(0.05));
  CHECK(model.transition(0, 0, 0) == doctest::Approx(0.3).epsilon(0.10));
  CHECK(model.reward(0, 1) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("model JSON round trip") {
  const TabularMDP mdp = make_chain();
  const SoftmaxPolicy policy = SoftmaxPolicy::uniform(3, 2);
  TabularModel model = exact_model(mdp);
  compute_value_tables(model, policy, mdp.discount(), mdp.horizon());
  model.set_fit_iteration(7);
  const TabularModel copy = TabularModel::from_json(model.to_json());
  CHECK(copy.num_states() == 3);
  CHECK(copy.num_actions() == 2);
  CHECK(copy.fit_iteration() == 7);
  CHECK(copy.value_horizon() == model.value_horizon());
  for (int s = 0; s < 3; ++s) {
    for (int a = 0; a < 2; ++a) {
      CHECK(copy.reward(s, a) == model.reward(s, a));
      for (int n = 0; n < 3; ++n) {
        CHECK(copy.transition(s, a, n) == model.transition(s, a, n));
      }
    }
  }
  CHECK(copy.v_value(0, 0) == model.v_value(0, 0));
  CHECK(copy.q_value(3, 1, 1) == model.q_value(3, 1, 1));
}
