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

#include "bps/mdp.hpp"

#include <cmath>
#include <cstdlib>

#include "bps/policy.hpp"
#include "bps/rng.hpp"
#include "json.hpp"

namespace bps {

namespace {
constexpr double kRowSumTol = 1e-12;
}

TabularMDP::TabularMDP(int num_states, int num_actions, int start_state,
                       int horizon, double discount)
    : num_states_(num_states),
      num_actions_(num_actions),
      start_state_(start_state),
      horizon_(horizon),
      discount_(discount) {
  if (num_states <= 0 || num_actions <= 0) {
    throw std::invalid_argument("MDP needs positive state/action counts");
  }
  if (start_state < 0 || start_state >= num_states) {
    throw std::invalid_argument("start state out of range");
  }
  if (horizon < 0) {
    throw std::invalid_argument("horizon must be non-negative");
  }
  if (discount < 0.0 || discount > 1.0) {
    throw std::invalid_argument("discount must lie in [0, 1]");
  }
  transition_.assign(
      static_cast<size_t>(num_states) * num_actions * num_states, 0.0);
  reward_.assign(transition_.size(), 0.0);
}

void TabularMDP::set_transition(int s, int a, int next, double p) {
  transition_[index(s, a, next)] = p;
}

void TabularMDP::set_reward(int s, int a, int next, double r) {
  reward_[index(s, a, next)] = r;
}

void TabularMDP::add_terminal(int s) {
  terminal_.insert(s);
  // Absorbing: self-loop with reward 0.
  for (int a = 0; a < num_actions_; ++a) {
    for (int next = 0; next < num_states_; ++next) {
      transition_[index(s, a, next)] = (next == s) ? 1.0 : 0.0;
      reward_[index(s, a, next)] = 0.0;
    }
  }
}

void TabularMDP::validate() const {
  for (int s = 0; s < num_states_; ++s) {
    for (int a = 0; a < num_actions_; ++a) {
      double sum = 0.0;
      for (int next = 0; next < num_states_; ++next) {
        double p = transition(s, a, next);
        if (p < 0.0 || p > 1.0) {
          throw std::invalid_argument("transition probability out of [0, 1]");
        }
        sum += p;
      }
      if (std::abs(sum - 1.0) > kRowSumTol) {
        throw std::invalid_argument("transition row does not sum to 1");
      }
    }
  }
  for (int s : terminal_) {
    for (int a = 0; a < num_actions_; ++a) {
      if (std::abs(transition(s, a, s) - 1.0) > kRowSumTol ||
          reward(s, a, s) != 0.0) {
        throw std::invalid_argument("terminal state is not absorbing");
      }
    }
  }
}

std::string TabularMDP::to_json() const {
  nlohmann::json j;
  j["num_states"] = num_states_;
  j["num_actions"] = num_actions_;
  j["start_state"] = start_state_;
  j["horizon"] = horizon_;
  j["discount"] = discount_;
  j["terminal_states"] = std::vector<int>(terminal_.begin(), terminal_.end());
  j["transition"] = transition_;
  j["reward"] = reward_;
  return j.dump(2);
}

TabularMDP TabularMDP::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  TabularMDP mdp(j.at("num_states").get<int>(), j.at("num_actions").get<int>(),
                 j.at("start_state").get<int>(), j.at("horizon").get<int>(),
                 j.at("discount").get<double>());
  mdp.transition_ = j.at("transition").get<std::vector<double>>();
  mdp.reward_ = j.at("reward").get<std::vector<double>>();
  if (mdp.transition_.size() != mdp.reward_.size() ||
      mdp.transition_.size() != static_cast<size_t>(mdp.num_states_) *
                                    mdp.num_actions_ * mdp.num_states_) {
    throw std::invalid_argument("MDP JSON tensor sizes do not match shape");
  }
  for (int s : j.at("terminal_states").get<std::vector<int>>()) {
    mdp.terminal_.insert(s);
  }
  mdp.validate();
  return mdp;
}

namespace {

struct GridSpec {
  int width = 4;
  int height = 4;
  double slip = 0.0;    // probability mass moved to the two side directions
  double rare_p = 0.0;  // UP in the start cell jumps to terminal, reward +50
};

int cell_index(const GridSpec& g, int col, int row) {
  return row * g.width + col;
}

TabularMDP make_grid(const GridSpec& g) {
  const int num_states = g.width * g.height;
  const int terminal = cell_index(g, g.width - 1, g.height - 1);
  const int penalty = cell_index(g, 1, 1);
  const int bonus = cell_index(g, 1, g.height - 1);
  TabularMDP mdp(num_states, 4, cell_index(g, 0, 0), 100, 1.0);

  auto entry_reward = [&](int next) {
    if (next == terminal) return 10.0;
    if (next == penalty) return -10.0;
    if (next == bonus) return 1.0;
    return -1.0;
  };
  auto move = [&](int col, int row, int dir) {
    int c = col, r = row;
    switch (dir) {
      case kGridUp: r -= 1; break;
      case kGridDown: r += 1; break;
      case kGridLeft: c -= 1; break;
      case kGridRight: c += 1; break;
    }
    if (c < 0 || c >= g.width || r < 0 || r >= g.height) return cell_index(g, col, row);
    return cell_index(g, c, r);
  };
  // Perpendicular slip directions ("left or right of intended").
  auto sides = [](int dir) -> std::pair<int, int> {
    if (dir == kGridUp || dir == kGridDown) return {kGridLeft, kGridRight};
    return {kGridUp, kGridDown};
  };

  for (int row = 0; row < g.height; ++row) {
    for (int col = 0; col < g.width; ++col) {
      const int s = cell_index(g, col, row);
      if (s == terminal) continue;  // filled in by add_terminal
      for (int a = 0; a < 4; ++a) {
        auto add = [&](int next, double p) {
          if (p <= 0.0) return;
          mdp.set_transition(s, a, next,
                             mdp.transition(s, a, next) + p);
          mdp.set_reward(s, a, next, entry_reward(next));
        };
        double main_mass = 1.0;
        if (s == mdp.start_state() && a == kGridUp && g.rare_p > 0.0) {
          mdp.set_transition(s, a, terminal,
                             mdp.transition(s, a, terminal) + g.rare_p);
          mdp.set_reward(s, a, terminal, 50.0);
          main_mass -= g.rare_p;
        }
        if (g.slip > 0.0) {
          auto [sl, sr] = sides(a);
          add(move(col, row, sl), main_mass * g.slip / 2.0);
          add(move(col, row, sr), main_mass * g.slip / 2.0);
          add(move(col, row, a), main_mass * (1.0 - g.slip));
        } else {
          add(move(col, row, a), main_mass);
        }
      }
    }
  }
  mdp.add_terminal(terminal);
  mdp.validate();
  return mdp;
}

}  // namespace

TabularMDP make_gridworld(GridVariant variant, double rare_p) {
  switch (variant) {
    case GridVariant::Det4x4:
      return make_grid(GridSpec{});
    case GridVariant::Stoch10x10:
      return make_grid(GridSpec{10, 10, 0.1, 0.0});
    case GridVariant::RareEvent: {
      if (rare_p < 0.0 || rare_p > 1.0) {
        throw std::domain_error("rare_event probability must lie in [0, 1]");
      }
      GridSpec g;
      g.rare_p = rare_p;
      return make_grid(g);
    }
  }
  throw std::invalid_argument("unknown gridworld variant");
}

TabularMDP make_gridworld(const std::string& variant, double rare_p) {
  if (variant == "det4x4") return make_gridworld(GridVariant::Det4x4);
  if (variant == "stoch10x10") return make_gridworld(GridVariant::Stoch10x10);
  if (variant == "stoch6x6") return make_stochastic_gridworld(6);
  if (variant == "rare_event") {
    return make_gridworld(GridVariant::RareEvent, rare_p);
  }
  throw std::invalid_argument("unknown gridworld variant: " + variant);
}

TabularMDP make_stochastic_gridworld(int side) {
  if (side < 3) throw std::invalid_argument("gridworld side must be >= 3");
  return make_grid(GridSpec{side, side, 0.1, 0.0});
}

double discounted_return(const Trajectory& traj, double gamma) {
  if (gamma < 0.0 || gamma > 1.0) {
    throw std::invalid_argument("discount must lie in [0, 1]");
  }
  double total = 0.0;
  double scale = 1.0;
  for (int t = 0; t < traj.effective_length; ++t) {
    total += scale * traj.rewards[t];
    scale *= gamma;
  }
  return total;
}

Trajectory sample_trajectory(const TabularMDP& mdp, const DiscretePolicy& policy,
                             uint64_t seed) {
  Xoshiro256 rng(seed);
  const int steps = mdp.horizon() + 1;
  Trajectory traj;
  traj.states.resize(steps);
  traj.actions.assign(steps, 0);
  traj.rewards.assign(steps, 0.0);

  int s = mdp.start_state();
  for (int t = 0; t < steps; ++t) {
    traj.states[t] = s;
    if (mdp.is_terminal(s)) continue;  // padded entries stay (s, 0, 0)
    // Inverse-CDF draws without materializing the distributions.
    double u = rng.uniform();
    int a = mdp.num_actions() - 1;
    double acc = 0.0;
    for (int cand = 0; cand < mdp.num_actions(); ++cand) {
      acc += policy.prob(t, s, cand);
      if (u < acc) {
        a = cand;
        break;
      }
    }
    u = rng.uniform();
    int next = s;
    acc = 0.0;
    for (int cand = 0; cand < mdp.num_states(); ++cand) {
      const double p = mdp.transition(s, a, cand);
      if (p == 0.0) continue;
      acc += p;
      next = cand;
      if (u < acc) break;
    }
    traj.actions[t] = a;
    traj.rewards[t] = mdp.reward(s, a, next);
    traj.effective_length = t + 1;
    s = next;
  }
  return traj;
}

double policy_value(const TabularMDP& mdp, const DiscretePolicy& policy) {
  const int S = mdp.num_states();
  const int A = mdp.num_actions();
  const int L = mdp.horizon();
  const double gamma = mdp.discount();

  std::vector<double> next(S, 0.0);  // v(t+1, .)
  std::vector<double> cur(S, 0.0);
  for (int t = L; t >= 0; --t) {
    for (int s = 0; s < S; ++s) {
      if (mdp.is_terminal(s)) {
        cur[s] = 0.0;
        continue;
      }
      double v = 0.0;
      for (int a = 0; a < A; ++a) {
        const double pa = policy.prob(t, s, a);
        if (pa == 0.0) continue;
        double q = 0.0;
        for (int sp = 0; sp < S; ++sp) {
          const double p = mdp.transition(s, a, sp);
          if (p == 0.0) continue;
          q += p * (mdp.reward(s, a, sp) + gamma * next[sp]);
        }
        v += pa * q;
      }
      cur[s] = v;
    }
    next = cur;
  }
  return next[mdp.start_state()];
}

namespace {

void enumerate_recursive(const TabularMDP& mdp, int t, int s, double prob,
                         Trajectory& partial, size_t max_paths,
                         EnumeratedTrajectorySet& out) {
  const int steps = mdp.horizon() + 1;
  if (t == steps || mdp.is_terminal(s)) {
    Trajectory traj = partial;
    traj.effective_length = t;
    traj.states.resize(steps, s);
    traj.actions.resize(steps, 0);
    traj.rewards.resize(steps, 0.0);
    out.trajectories.push_back(std::move(traj));
    out.base_probabilities.push_back(prob);
    if (out.trajectories.size() > max_paths) {
      throw CapacityError("trajectory enumeration exceeded max_paths");
    }
    return;
  }
  for (int a = 0; a < mdp.num_actions(); ++a) {
    for (int sp = 0; sp < mdp.num_states(); ++sp) {
      const double p = mdp.transition(s, a, sp);
      if (p == 0.0) continue;
      partial.states.push_back(s);
      partial.actions.push_back(a);
      partial.rewards.push_back(mdp.reward(s, a, sp));
      enumerate_recursive(mdp, t + 1, sp, prob * p, partial, max_paths, out);
      partial.states.pop_back();
      partial.actions.pop_back();
      partial.rewards.pop_back();
    }
  }
}

}  // namespace

EnumeratedTrajectorySet enumerate_trajectories(const TabularMDP& mdp,
                                               size_t max_paths) {
  EnumeratedTrajectorySet out;
  Trajectory partial;
  enumerate_recursive(mdp, 0, mdp.start_state(), 1.0, partial, max_paths, out);
  return out;
}

}  // namespace bps
