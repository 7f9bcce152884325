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

#include "bps/bpg.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "bps/rng.hpp"

namespace bps {

void BPGConfig::validate() const {
  if (eval_theta.empty()) {
    throw std::invalid_argument("eval_theta must be set");
  }
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
  if (!step_schedule.empty() &&
      static_cast<int>(step_schedule.size()) < iterations) {
    throw std::invalid_argument("step schedule shorter than iteration count");
  }
  for (int i = 0; i < iterations; ++i) {
    if (step(i) < 0.0) throw std::invalid_argument("step sizes must be >= 0");
  }
  if (warmup_iterations < 0) {
    throw std::invalid_argument("warmup_iterations must be >= 0");
  }
}

GradientEstimate is_mse_gradient(const std::vector<Trajectory>& batch,
                                 const SoftmaxPolicy& behavior,
                                 const SoftmaxPolicy& eval, double gamma,
                                 double baseline) {
  if (batch.empty()) throw std::invalid_argument("empty gradient batch");
  GradientEstimate out;
  out.gradient.assign(behavior.theta().size(), 0.0);
  out.baseline = baseline;
  const double inv_k = 1.0 / static_cast<double>(batch.size());
  for (const Trajectory& traj : batch) {
    const double is_value = is_estimate(traj, eval, behavior, gamma);
    out.batch_sq_moment += inv_k * is_value * is_value;
    const double coeff = inv_k * (-is_value * is_value - baseline);
    for (int t = 0; t < traj.effective_length; ++t) {
      behavior.accumulate_score(traj.states[t], traj.actions[t], coeff,
                                out.gradient);
    }
  }
  for (double g : out.gradient) {
    if (!std::isfinite(g)) {
      throw std::runtime_error("non-finite gradient coordinate");
    }
  }
  return out;
}

GradientEstimate dr_mse_gradient(const std::vector<Trajectory>& batch,
                                 const SoftmaxPolicy& behavior,
                                 const SoftmaxPolicy& eval,
                                 const TabularModel& model, double gamma) {
  if (batch.empty()) throw std::invalid_argument("empty gradient batch");
  GradientEstimate out;
  out.gradient.assign(behavior.theta().size(), 0.0);
  const double inv_k = 1.0 / static_cast<double>(batch.size());
  std::vector<double> term(0);
  for (const Trajectory& traj : batch) {
    const double dr_value = dr_estimate(traj, eval, behavior, model, gamma);
    out.batch_sq_moment += inv_k * dr_value * dr_value;

    // c_t = gamma^t delta_t w_{e,t}/w_{b,t} for each real step.
    const int steps = traj.effective_length;
    term.assign(steps, 0.0);
    double log_ratio = 0.0;
    double scale = 1.0;
    const int L = traj.length() - 1;
    for (int t = 0; t < steps; ++t) {
      const int s = traj.states[t];
      const int a = traj.actions[t];
      const double pb = behavior.prob(t, s, a);
      if (pb <= 0.0) {
        throw SupportViolationError("behavior policy has zero support");
      }
      log_ratio += eval.log_prob(t, s, a) - std::log(pb);
      const double next_v =
          (t + 1 <= L) ? model.v_value(t + 1, traj.states[t + 1]) : 0.0;
      const double delta =
          traj.rewards[t] - model.q_value(t, s, a) + gamma * next_v;
      term[t] = scale * std::exp(log_ratio) * delta;
      scale *= gamma;
    }
    // sum_t c_t sum_{i<=t} score_i == sum_i (sum_{t>=i} c_t) score_i.
    double suffix = 0.0;
    std::vector<double> suffix_at(steps, 0.0);
    for (int t = steps - 1; t >= 0; --t) {
      suffix += term[t];
      suffix_at[t] = suffix;
    }
    for (int t = 0; t < steps; ++t) {
      const double coeff =
          inv_k * (dr_value * dr_value - 2.0 * dr_value * suffix_at[t]);
      behavior.accumulate_score(traj.states[t], traj.actions[t], coeff,
                                out.gradient);
    }
  }
  for (double g : out.gradient) {
    if (!std::isfinite(g)) {
      throw std::runtime_error("non-finite gradient coordinate");
    }
  }
  return out;
}

double uncentered_second_moment(const std::vector<Trajectory>& batch,
                                const SoftmaxPolicy& behavior,
                                const SoftmaxPolicy& eval, double gamma,
                                EstimatorKind kind, const TabularModel* model) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  double sum = 0.0;
  for (const Trajectory& traj : batch) {
    const double value =
        kind == EstimatorKind::IS
            ? is_estimate(traj, eval, behavior, gamma)
            : dr_estimate(traj, eval, behavior, *model, gamma);
    sum += value * value;
  }
  return sum / static_cast<double>(batch.size());
}

namespace {

std::vector<Trajectory> sample_batch(const TabularMDP& mdp,
                                     const SoftmaxPolicy& behavior,
                                     uint64_t root_seed, int iteration,
                                     int batch_size) {
  std::vector<Trajectory> batch;
  batch.reserve(batch_size);
  for (int j = 0; j < batch_size; ++j) {
    Trajectory traj = sample_trajectory(
        mdp, behavior, derive_seed(root_seed, iteration, j));
    traj.behavior_params = behavior.theta();
    batch.push_back(std::move(traj));
  }
  return batch;
}

}  // namespace

BPGResult bpg_run(const TabularMDP& mdp, const BPGConfig& config) {
  config.validate();
  const double gamma = mdp.discount();
  const SoftmaxPolicy eval(mdp.num_states(), mdp.num_actions(),
                           config.eval_theta);
  std::vector<double> theta = config.eval_theta;  // theta_0 = theta_e

  BPGResult result{.final_theta = {},
                   .series = {},
                   .dataset = Dataset(mdp.num_states(), mdp.num_actions())};
  double initial_sq_moment = 0.0;
  double previous_sq_moment = 0.0;
  // Each trajectory's IS value is fixed once sampled (weighted by its own
  // snapshot), so the dataset estimate is a running mean.
  double is_sum = 0.0;

  for (int i = 0; i < config.iterations; ++i) {
    const SoftmaxPolicy behavior(mdp.num_states(), mdp.num_actions(), theta);
    const std::vector<Trajectory> batch =
        sample_batch(mdp, behavior, config.root_seed, i, config.batch_size);
    for (const Trajectory& traj : batch) {
      result.dataset.add(traj);
      is_sum += is_estimate(traj, eval, behavior, gamma);
    }

    // b_i is the previous batch's mean of -IS^2; independent of batch i.
    const double baseline =
        (config.baseline_enabled && i > 0) ? -previous_sq_moment : 0.0;
    const GradientEstimate grad =
        is_mse_gradient(batch, behavior, eval, gamma, baseline);

    result.series.records.push_back(
        {i, is_sum / static_cast<double>(result.dataset.size()),
         grad.batch_sq_moment, i, derive_seed(config.root_seed, i, 0)});

    if (i == 0) initial_sq_moment = grad.batch_sq_moment;
    if (grad.batch_sq_moment >
        config.divergence_factor * std::max(initial_sq_moment, 1e-12)) {
      result.diverged = true;
      result.diverged_at = i;
      break;
    }
    previous_sq_moment = grad.batch_sq_moment;

    const double alpha = config.step(i);
    for (size_t d = 0; d < theta.size(); ++d) {
      theta[d] -= alpha * grad.gradient[d];
    }
  }
  result.final_theta = theta;
  return result;
}

DRBPGResult dr_bpg_run(const TabularMDP& mdp, const BPGConfig& config) {
  config.validate();
  const double gamma = mdp.discount();
  const int L = mdp.horizon();
  const SoftmaxPolicy eval(mdp.num_states(), mdp.num_actions(),
                           config.eval_theta);
  std::vector<double> theta = config.eval_theta;

  DRBPGResult out{
      .run = {.final_theta = {},
              .series = {},
              .dataset = Dataset(mdp.num_states(), mdp.num_actions())},
      .model = zero_model(mdp.num_states(), mdp.num_actions(), L)};
  bool model_ready = config.zero_model;

  double initial_sq_moment = 0.0;
  bool have_initial = false;

  for (int i = 0; i < config.iterations; ++i) {
    const SoftmaxPolicy behavior(mdp.num_states(), mdp.num_actions(), theta);
    const std::vector<Trajectory> batch =
        sample_batch(mdp, behavior, config.root_seed, i, config.batch_size);
    for (const Trajectory& traj : batch) out.run.dataset.add(traj);

    const bool warming_up = i < config.warmup_iterations;
    const bool refit =
        !config.zero_model &&
        (config.model_mode == ModelMode::Update ||
         (config.model_mode == ModelMode::Fixed && !model_ready && !warming_up));
    if (refit || (!config.zero_model && warming_up)) {
      out.model =
          fit_tabular_model(out.run.dataset.trajectories(), mdp.num_states(),
                            mdp.num_actions());
      compute_value_tables(out.model, eval, gamma, L);
      out.model.set_fit_iteration(i);
      if (config.model_mode == ModelMode::Fixed && !warming_up) {
        model_ready = true;
      }
    }

    double estimate;
    double sq_moment;
    if (warming_up) {
      // On-policy phase: advantage-sum estimates, no parameter updates.
      estimate = ase_estimate(out.run.dataset, out.model, gamma);
      sq_moment = uncentered_second_moment(batch, behavior, eval, gamma,
                                           EstimatorKind::DR, &out.model);
      out.run.series.records.push_back(
          {i, estimate, sq_moment, i, derive_seed(config.root_seed, i, 0)});
      continue;
    }

    const GradientEstimate grad =
        dr_mse_gradient(batch, behavior, eval, out.model, gamma);
    estimate = dr_estimate_dataset(out.run.dataset, eval, out.model, gamma);
    sq_moment = grad.batch_sq_moment;
    out.run.series.records.push_back(
        {i, estimate, sq_moment, i, derive_seed(config.root_seed, i, 0)});

    if (!have_initial) {
      initial_sq_moment = sq_moment;
      have_initial = true;
    }
    if (sq_moment >
        config.divergence_factor * std::max(initial_sq_moment, 1e-12)) {
      out.run.diverged = true;
      out.run.diverged_at = i;
      break;
    }

    const double alpha = config.step(i);
    for (size_t d = 0; d < theta.size(); ++d) {
      theta[d] -= alpha * grad.gradient[d];
    }
  }
  out.run.final_theta = theta;
  return out;
}

std::vector<double> reinforce_run(const TabularMDP& mdp,
                                  const std::vector<double>& init_theta,
                                  double step_size, int iterations,
                                  int batch_size, uint64_t seed) {
  const double gamma = mdp.discount();
  std::vector<double> theta = init_theta;
  std::vector<double> grad(theta.size());
  for (int i = 0; i < iterations; ++i) {
    const SoftmaxPolicy policy(mdp.num_states(), mdp.num_actions(), theta);
    std::vector<double> returns(batch_size);
    std::vector<Trajectory> batch;
    batch.reserve(batch_size);
    double mean_return = 0.0;
    for (int j = 0; j < batch_size; ++j) {
      batch.push_back(
          sample_trajectory(mdp, policy, derive_seed(seed, i, j)));
      returns[j] = discounted_return(batch.back(), gamma);
      mean_return += returns[j] / batch_size;
    }
    std::fill(grad.begin(), grad.end(), 0.0);
    for (int j = 0; j < batch_size; ++j) {
      const double coeff = (returns[j] - mean_return) / batch_size;
      for (int t = 0; t < batch[j].effective_length; ++t) {
        policy.accumulate_score(batch[j].states[t], batch[j].actions[t], coeff,
                                grad);
      }
    }
    for (size_t d = 0; d < theta.size(); ++d) {
      theta[d] += step_size * grad[d];
    }
  }
  return theta;
}

EvalPolicyPair generate_eval_policies(const TabularMDP& mdp, uint64_t seed,
                                      double step_size, int batch_size,
                                      int max_iterations) {
  const int S = mdp.num_states();
  const int A = mdp.num_actions();
  std::vector<double> theta(static_cast<size_t>(S) * A, 0.0);

  std::vector<std::vector<double>> history;
  std::vector<double> values;
  history.push_back(theta);
  values.push_back(policy_value(mdp, SoftmaxPolicy(S, A, theta)));

  constexpr int kWindow = 50;
  constexpr double kConvergenceTol = 0.1;
  int converged_at = -1;
  for (int i = 0; i < max_iterations; ++i) {
    theta = reinforce_run(mdp, theta, step_size, 1, batch_size,
                          derive_seed(seed, i));
    history.push_back(theta);
    values.push_back(policy_value(mdp, SoftmaxPolicy(S, A, theta)));
    const int n = static_cast<int>(values.size());
    if (n > kWindow &&
        std::abs(values[n - 1] - values[n - 1 - kWindow]) < kConvergenceTol) {
      converged_at = n - 1;
      break;
    }
  }
  if (converged_at < 0) converged_at = static_cast<int>(values.size()) - 1;

  EvalPolicyPair pair;
  pair.pi2 = history[converged_at];
  pair.value_pi2 = values[converged_at];
  const double target = 0.5 * pair.value_pi2;
  int first = converged_at;
  for (int i = 0; i <= converged_at; ++i) {
    if (values[i] >= target) {
      first = i;
      break;
    }
  }
  pair.pi1 = history[first];
  pair.value_pi1 = values[first];
  return pair;
}

TrajectoryTreePolicy optimal_behavior_policy(const TabularMDP& mdp,
                                             const DiscretePolicy& eval,
                                             size_t max_paths) {
  // Deterministic transitions required.
  for (int s = 0; s < mdp.num_states(); ++s) {
    for (int a = 0; a < mdp.num_actions(); ++a) {
      for (int next = 0; next < mdp.num_states(); ++next) {
        const double p = mdp.transition(s, a, next);
        if (p != 0.0 && p != 1.0) {
          throw std::domain_error(
              "optimal behavior policy requires deterministic transitions");
        }
      }
    }
  }
  const EnumeratedTrajectorySet all = enumerate_trajectories(mdp, max_paths);
  const double gamma = mdp.discount();

  std::vector<double> masses(all.size());
  double rho = 0.0;
  for (size_t i = 0; i < all.size(); ++i) {
    const double g = discounted_return(all.trajectories[i], gamma);
    if (g <= 0.0) {
      throw std::domain_error(
          "optimal behavior policy requires positive returns");
    }
    masses[i] = g * trajectory_weight(eval, all.trajectories[i]);
    rho += masses[i];  // base probabilities are 1 for deterministic MDPs
  }
  for (double& m : masses) m /= rho;

  // Distribute trajectory mass over the action-prefix tree; the conditional
  // at a node is subtree mass through each action over the node's mass.
  TrajectoryTreePolicy tree(mdp.num_actions());
  tree.mutable_node(tree.root()).state = mdp.start_state();
  std::vector<double> node_action_mass;  // flattened alongside nodes lazily
  struct NodeMass {
    std::vector<double> per_action;
  };
  std::vector<NodeMass> mass_of{{std::vector<double>(mdp.num_actions(), 0.0)}};

  auto ensure_arrays = [&](int node_id) {
    if (tree.mutable_node(node_id).children.empty()) {
      tree.mutable_node(node_id).children.assign(mdp.num_actions(), -1);
    }
    if (static_cast<size_t>(node_id) >= mass_of.size()) {
      mass_of.resize(node_id + 1);
    }
    if (mass_of[node_id].per_action.empty()) {
      mass_of[node_id].per_action.assign(mdp.num_actions(), 0.0);
    }
  };

  for (size_t i = 0; i < all.size(); ++i) {
    const Trajectory& traj = all.trajectories[i];
    int node_id = tree.root();
    for (int t = 0; t < traj.effective_length; ++t) {
      ensure_arrays(node_id);
      const int a = traj.actions[t];
      mass_of[node_id].per_action[a] += masses[i];
      int child = tree.mutable_node(node_id).children[a];
      if (child < 0) {
        const int next_state =
            (t + 1 < traj.length()) ? traj.states[t + 1] : traj.states[t];
        child = tree.add_node(next_state);
        tree.mutable_node(node_id).children[a] = child;
      }
      node_id = child;
    }
  }

  // Convert masses to conditionals.
  for (size_t id = 0; id < mass_of.size(); ++id) {
    if (mass_of[id].per_action.empty()) continue;
    double total = 0.0;
    for (double m : mass_of[id].per_action) total += m;
    if (total <= 0.0) continue;
    auto& node = tree.mutable_node(static_cast<int>(id));
    node.action_probs.resize(mdp.num_actions());
    for (int a = 0; a < mdp.num_actions(); ++a) {
      node.action_probs[a] = mass_of[id].per_action[a] / total;
    }
  }
  return tree;
}

// --- Exact oracles ---------------------------------------------------------

namespace {

template <typename PerTrajectory>
double enumeration_expectation(const TabularMDP& mdp,
                               const SoftmaxPolicy& behavior,
                               PerTrajectory&& value) {
  const EnumeratedTrajectorySet all = enumerate_trajectories(mdp);
  double total = 0.0;
  for (size_t i = 0; i < all.size(); ++i) {
    const double pr = all.base_probabilities[i] *
                      trajectory_weight(behavior, all.trajectories[i]);
    if (pr == 0.0) continue;
    total += pr * value(all.trajectories[i]);
  }
  return total;
}

}  // namespace

double exact_is_expectation(const TabularMDP& mdp, const SoftmaxPolicy& behavior,
                            const SoftmaxPolicy& eval) {
  const double gamma = mdp.discount();
  return enumeration_expectation(mdp, behavior, [&](const Trajectory& traj) {
    return is_estimate(traj, eval, behavior, gamma);
  });
}

double exact_dr_expectation(const TabularMDP& mdp, const SoftmaxPolicy& behavior,
                            const SoftmaxPolicy& eval,
                            const TabularModel& model) {
  const double gamma = mdp.discount();
  return enumeration_expectation(mdp, behavior, [&](const Trajectory& traj) {
    return dr_estimate(traj, eval, behavior, model, gamma);
  });
}

double exact_is_variance(const TabularMDP& mdp, const SoftmaxPolicy& behavior,
                         const SoftmaxPolicy& eval) {
  const double gamma = mdp.discount();
  const double rho = policy_value(mdp, eval);
  const double second =
      enumeration_expectation(mdp, behavior, [&](const Trajectory& traj) {
        const double v = is_estimate(traj, eval, behavior, gamma);
        return v * v;
      });
  return second - rho * rho;
}

double exact_dr_mse(const TabularMDP& mdp, const SoftmaxPolicy& behavior,
                    const SoftmaxPolicy& eval, const TabularModel& model) {
  const double gamma = mdp.discount();
  const double rho = policy_value(mdp, eval);
  const double second =
      enumeration_expectation(mdp, behavior, [&](const Trajectory& traj) {
        const double v = dr_estimate(traj, eval, behavior, model, gamma);
        return v * v;
      });
  return second - rho * rho;
}

std::vector<double> exact_is_mse_gradient(const TabularMDP& mdp,
                                          const SoftmaxPolicy& behavior,
                                          const SoftmaxPolicy& eval) {
  const double gamma = mdp.discount();
  const EnumeratedTrajectorySet all = enumerate_trajectories(mdp);
  std::vector<double> grad(behavior.theta().size(), 0.0);
  for (size_t i = 0; i < all.size(); ++i) {
    const Trajectory& traj = all.trajectories[i];
    const double pr =
        all.base_probabilities[i] * trajectory_weight(behavior, traj);
    if (pr == 0.0) continue;
    const double is_value = is_estimate(traj, eval, behavior, gamma);
    const double coeff = pr * (-is_value * is_value);
    for (int t = 0; t < traj.effective_length; ++t) {
      behavior.accumulate_score(traj.states[t], traj.actions[t], coeff, grad);
    }
  }
  return grad;
}

std::vector<double> exact_dr_mse_gradient(const TabularMDP& mdp,
                                          const SoftmaxPolicy& behavior,
                                          const SoftmaxPolicy& eval,
                                          const TabularModel& model) {
  const EnumeratedTrajectorySet all = enumerate_trajectories(mdp);
  std::vector<double> grad(behavior.theta().size(), 0.0);
  for (size_t i = 0; i < all.size(); ++i) {
    const Trajectory& traj = all.trajectories[i];
    const double pr =
        all.base_probabilities[i] * trajectory_weight(behavior, traj);
    if (pr == 0.0) continue;
    const GradientEstimate single =
        dr_mse_gradient({traj}, behavior, eval, model, mdp.discount());
    for (size_t d = 0; d < grad.size(); ++d) {
      grad[d] += pr * single.gradient[d];
    }
  }
  return grad;
}

namespace {

std::vector<double> central_differences(
    const std::vector<double>& theta, double step,
    const std::function<double(const std::vector<double>&)>& objective) {
  std::vector<double> grad(theta.size());
  std::vector<double> probe = theta;
  for (size_t d = 0; d < theta.size(); ++d) {
    probe[d] = theta[d] + step;
    const double plus = objective(probe);
    probe[d] = theta[d] - step;
    const double minus = objective(probe);
    probe[d] = theta[d];
    grad[d] = (plus - minus) / (2.0 * step);
  }
  return grad;
}

}  // namespace

std::vector<double> exact_is_mse_fd_gradient(const TabularMDP& mdp,
                                             const SoftmaxPolicy& behavior,
                                             const SoftmaxPolicy& eval,
                                             double step) {
  return central_differences(
      behavior.theta(), step, [&](const std::vector<double>& theta) {
        const SoftmaxPolicy probe(mdp.num_states(), mdp.num_actions(), theta);
        // rho^2 is theta-independent, so MSE and E[IS^2] share gradients.
        return exact_is_variance(mdp, probe, eval);
      });
}

std::vector<double> exact_dr_mse_fd_gradient(const TabularMDP& mdp,
                                             const SoftmaxPolicy& behavior,
                                             const SoftmaxPolicy& eval,
                                             const TabularModel& model,
                                             double step) {
  return central_differences(
      behavior.theta(), step, [&](const std::vector<double>& theta) {
        const SoftmaxPolicy probe(mdp.num_states(), mdp.num_actions(), theta);
        return exact_dr_mse(mdp, probe, eval, model);
      });
}

std::vector<double> exact_return_gradient(const TabularMDP& mdp,
                                          const SoftmaxPolicy& policy) {
  const double gamma = mdp.discount();
  const EnumeratedTrajectorySet all = enumerate_trajectories(mdp);
  std::vector<double> grad(policy.theta().size(), 0.0);
  for (size_t i = 0; i < all.size(); ++i) {
    const Trajectory& traj = all.trajectories[i];
    const double pr =
        all.base_probabilities[i] * trajectory_weight(policy, traj);
    if (pr == 0.0) continue;
    const double coeff = pr * discounted_return(traj, gamma);
    for (int t = 0; t < traj.effective_length; ++t) {
      policy.accumulate_score(traj.states[t], traj.actions[t], coeff, grad);
    }
  }
  return grad;
}

}  // namespace bps
