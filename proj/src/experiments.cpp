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

#include "bps/experiments.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

#include "bps/rng.hpp"
#include "json.hpp"

namespace bps {

namespace {

constexpr uint64_t kProbeStream = 999983;  // keeps probes out of run streams

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot open for writing: " + path.string());
  }
  out << content;
  if (!out) {
    throw std::runtime_error("write failed: " + path.string());
  }
}

EstimatorKind parse_estimator(const std::string& name) {
  if (name == "IS") return EstimatorKind::IS;
  if (name == "DR") return EstimatorKind::DR;
  throw std::invalid_argument("unknown estimator: " + name);
}

ModelMode parse_model_mode(const std::string& name) {
  if (name == "fixed") return ModelMode::Fixed;
  if (name == "update") return ModelMode::Update;
  throw std::invalid_argument("unknown model_mode: " + name);
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

void parallel_for(int count, int workers,
                  const std::function<void(int)>& body) {
  if (workers <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    while (true) {
      const int i = next.fetch_add(1);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const int n = std::min(workers, count);
  pool.reserve(n);
  for (int w = 0; w < n; ++w) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

// --- Config ----------------------------------------------------------------

std::string ExperimentConfig::to_json() const {
  nlohmann::json j;
  j["name"] = name;
  j["environment"] = environment;
  j["rare_p"] = rare_p;
  j["eval_policy"] = eval_policy;
  j["reinforce_seed"] = reinforce_seed;
  j["batch_size"] = batch_size;
  j["step_size"] = step_size;
  j["iterations"] = iterations;
  j["baseline_enabled"] = baseline_enabled;
  j["estimator"] = estimator;
  j["model_mode"] = model_mode;
  j["warmup_iterations"] = warmup_iterations;
  j["zero_model"] = zero_model;
  j["trials"] = trials;
  j["seed"] = seed;
  j["workers"] = workers;
  j["holdout"] = holdout;
  j["probe_samples"] = probe_samples;
  j["probe_repeats"] = probe_repeats;
  j["alphas"] = alphas;
  j["rare_probs"] = rare_probs;
  return j.dump(2);
}

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  ExperimentConfig c;
  c.name = j.value("name", c.name);
  c.environment = j.value("environment", c.environment);
  c.rare_p = j.value("rare_p", c.rare_p);
  c.eval_policy = j.value("eval_policy", c.eval_policy);
  c.reinforce_seed = j.value("reinforce_seed", c.reinforce_seed);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.step_size = j.value("step_size", c.step_size);
  c.iterations = j.value("iterations", c.iterations);
  c.baseline_enabled = j.value("baseline_enabled", c.baseline_enabled);
  c.estimator = j.value("estimator", c.estimator);
  c.model_mode = j.value("model_mode", c.model_mode);
  c.warmup_iterations = j.value("warmup_iterations", c.warmup_iterations);
  c.zero_model = j.value("zero_model", c.zero_model);
  c.trials = j.value("trials", c.trials);
  c.seed = j.value("seed", c.seed);
  c.workers = j.value("workers", c.workers);
  c.holdout = j.value("holdout", c.holdout);
  c.probe_samples = j.value("probe_samples", c.probe_samples);
  c.probe_repeats = j.value("probe_repeats", c.probe_repeats);
  c.alphas = j.value("alphas", c.alphas);
  c.rare_probs = j.value("rare_probs", c.rare_probs);
  return c;
}

void ExperimentConfig::validate() const {
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  if (workers < 1) throw std::invalid_argument("workers must be >= 1");
  if (holdout < 0) throw std::invalid_argument("holdout must be >= 0");
  if (step_size < 0.0) throw std::invalid_argument("step_size must be >= 0");
  if (probe_samples < 2) {
    throw std::invalid_argument("probe_samples must be >= 2");
  }
  if (probe_repeats < 1) {
    throw std::invalid_argument("probe_repeats must be >= 1");
  }
  if (warmup_iterations < 0) {
    throw std::invalid_argument("warmup_iterations must be >= 0");
  }
  if (rare_p <= 0.0 || rare_p > 1.0) {
    throw std::invalid_argument("rare_p must lie in (0, 1]");
  }
  parse_estimator(estimator);
  parse_model_mode(model_mode);
  if (environment != "det4x4" && environment != "stoch10x10" &&
      environment != "stoch6x6" && environment != "stoch6x6_jump" &&
      environment != "rare_event") {
    throw std::invalid_argument("unknown environment: " + environment);
  }
  for (double a : alphas) {
    if (a < 0.0) throw std::invalid_argument("alphas must be >= 0");
  }
  for (double p : rare_probs) {
    if (p <= 0.0 || p > 1.0) {
      throw std::invalid_argument("rare_probs must lie in (0, 1]");
    }
  }
}

// --- Setup -----------------------------------------------------------------

TabularMDP make_environment(const std::string& name, double rare_p) {
  if (name == "det4x4") return make_gridworld(GridVariant::Det4x4);
  if (name == "stoch10x10") return make_gridworld(GridVariant::Stoch10x10);
  if (name == "stoch6x6") return make_stochastic_gridworld(6);
  if (name == "stoch6x6_jump") {
    TabularMDP mdp = make_stochastic_gridworld(6);
    const int start = mdp.start_state();
    const int term = *mdp.terminal_states().begin();
    const int S = mdp.num_states();
    std::vector<double> row(S);
    for (int n = 0; n < S; ++n) row[n] = mdp.transition(start, kGridUp, n);
    for (int n = 0; n < S; ++n) {
      mdp.set_transition(start, kGridUp, n, 0.9 * row[n]);
    }
    mdp.set_transition(start, kGridUp, term, 0.9 * row[term] + 0.1);
    mdp.set_reward(start, kGridUp, term, 150.0);
    mdp.validate();
    return mdp;
  }
  if (name == "rare_event") {
    return make_gridworld(GridVariant::RareEvent, rare_p);
  }
  throw std::invalid_argument("unknown environment: " + name);
}

std::vector<double> with_start_action_probability(const TabularMDP& mdp,
                                                  std::vector<double> theta,
                                                  int action, double p) {
  if (p <= 0.0 || p > 1.0) {
    throw std::invalid_argument("start action probability must be in (0, 1]");
  }
  const int A = mdp.num_actions();
  const SoftmaxPolicy base(mdp.num_states(), A, theta);
  const int start = mdp.start_state();
  double rest = 0.0;
  for (int a = 0; a < A; ++a) {
    if (a != action) rest += base.prob(0, start, a);
  }
  for (int a = 0; a < A; ++a) {
    const double mass =
        a == action
            ? p
            : std::max((1.0 - p) * base.prob(0, start, a) / rest, 1e-12);
    theta[static_cast<size_t>(start) * A + a] = std::log(mass);
  }
  return theta;
}

namespace {

// REINFORCE policy generation is the slow part of setup; trials share it.
const EvalPolicyPair& cached_eval_policies(const TabularMDP& mdp,
                                           const std::string& environment,
                                           double rare_p, uint64_t seed) {
  static std::map<std::string, EvalPolicyPair> cache;
  static std::mutex cache_mutex;
  const std::string key = environment + "/" + format_double(rare_p) + "/" +
                          std::to_string(seed);
  std::lock_guard<std::mutex> lock(cache_mutex);
  auto it = cache.find(key);
  if (it == cache.end()) {
    it = cache.emplace(key, generate_eval_policies(mdp, seed)).first;
  }
  return it->second;
}

}  // namespace

ResolvedSetup resolve_setup(const ExperimentConfig& config) {
  config.validate();
  TabularMDP mdp = make_environment(config.environment, config.rare_p);
  std::vector<double> theta;
  if (config.eval_policy == "uniform") {
    theta.assign(static_cast<size_t>(mdp.num_states()) * mdp.num_actions(),
                 0.0);
  } else if (config.eval_policy == "pi1" || config.eval_policy == "pi2") {
    const EvalPolicyPair& pair = cached_eval_policies(
        mdp, config.environment, config.rare_p, config.reinforce_seed);
    theta = config.eval_policy == "pi1" ? pair.pi1 : pair.pi2;
  } else {
    std::ifstream in(config.eval_policy, std::ios::binary);
    if (!in) {
      throw std::invalid_argument("cannot read policy fixture: " +
                                  config.eval_policy);
    }
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    theta = SoftmaxPolicy::from_json(text).theta();
  }
  const double value = policy_value(
      mdp, SoftmaxPolicy(mdp.num_states(), mdp.num_actions(), theta));
  return ResolvedSetup{std::move(mdp), std::move(theta), value};
}

double variance_probe(const TabularMDP& mdp, const SoftmaxPolicy& behavior,
                      const SoftmaxPolicy& eval, double gamma,
                      EstimatorKind kind, const TabularModel* model,
                      int samples, int repeats, uint64_t probe_seed) {
  if (samples < 2) throw std::invalid_argument("probe needs >= 2 samples");
  if (kind == EstimatorKind::DR && model == nullptr) {
    throw std::invalid_argument("DR probe needs a model");
  }
  double total = 0.0;
  for (int rep = 0; rep < repeats; ++rep) {
    double sum = 0.0;
    double sum_sq = 0.0;
    for (int j = 0; j < samples; ++j) {
      const Trajectory traj =
          sample_trajectory(mdp, behavior, derive_seed(probe_seed, rep, j));
      const double v = kind == EstimatorKind::IS
                           ? is_estimate(traj, eval, behavior, gamma)
                           : dr_estimate(traj, eval, behavior, *model, gamma);
      sum += v;
      sum_sq += v * v;
    }
    const double mean = sum / samples;
    total += (sum_sq - samples * mean * mean) / (samples - 1);
  }
  return total / repeats;
}

// --- Gradcheck -------------------------------------------------------------

namespace {

TabularMDP random_small_mdp(uint64_t seed, int index) {
  Xoshiro256 rng(derive_seed(seed, index, 7));
  const int S = 2 + static_cast<int>(rng.next() % 2);
  const int A = 2 + static_cast<int>(rng.next() % 2);
  const int L = 1 + static_cast<int>(rng.next() % 3);
  const double gamma = (index % 2 == 0) ? 1.0 : 0.9;
  const bool with_terminal = index % 3 == 0;

  TabularMDP mdp(S, A, 0, L, gamma);
  const int terminal = S - 1;
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      if (with_terminal && s == terminal) {
        mdp.set_transition(s, a, s, 1.0);
        continue;
      }
      std::vector<double> w(S);
      double total = 0.0;
      for (int next = 0; next < S; ++next) {
        w[next] = 0.1 + rng.uniform();
        total += w[next];
      }
      for (int next = 0; next < S; ++next) {
        mdp.set_transition(s, a, next, w[next] / total);
        mdp.set_reward(s, a, next, 2.0 * rng.uniform() - 1.0);
      }
    }
  }
  if (with_terminal) mdp.add_terminal(terminal);
  mdp.validate();
  return mdp;
}

std::vector<double> random_theta(int S, int A, uint64_t seed) {
  Xoshiro256 rng(seed);
  std::vector<double> theta(static_cast<size_t>(S) * A);
  for (double& x : theta) x = 0.5 * rng.normal();
  return theta;
}

double max_relative_error(const std::vector<double>& analytic,
                          const std::vector<double>& reference) {
  double worst = 0.0;
  for (size_t d = 0; d < analytic.size(); ++d) {
    const double denom = std::max(1.0, std::abs(reference[d]));
    worst = std::max(worst, std::abs(analytic[d] - reference[d]) / denom);
  }
  return worst;
}

}  // namespace

std::string GradcheckReport::to_json() const {
  nlohmann::json j;
  j["max_rel_err_is"] = max_rel_err_is;
  j["max_rel_err_dr"] = max_rel_err_dr;
  j["bandit_gradient"] = bandit_gradient;
  j["mdps_checked"] = mdps_checked;
  j["passed"] = passed;
  return j.dump(2);
}

GradcheckReport run_gradcheck(uint64_t seed, int num_mdps, double tol_is,
                              double tol_dr, bool corrupt_score) {
  GradcheckReport report;
  for (int i = 0; i < num_mdps; ++i) {
    const TabularMDP mdp = random_small_mdp(seed, i);
    const int S = mdp.num_states();
    const int A = mdp.num_actions();
    const SoftmaxPolicy eval(S, A, random_theta(S, A, derive_seed(seed, i, 1)));
    const SoftmaxPolicy behavior(S, A,
                                 random_theta(S, A, derive_seed(seed, i, 2)));

    std::vector<double> analytic = exact_is_mse_gradient(mdp, behavior, eval);
    if (corrupt_score) {
      for (double& g : analytic) g += 0.01;
    }
    report.max_rel_err_is = std::max(
        report.max_rel_err_is,
        max_relative_error(analytic,
                           exact_is_mse_fd_gradient(mdp, behavior, eval)));

    TabularModel model = exact_model(mdp);
    compute_value_tables(model, eval, mdp.discount(), mdp.horizon());
    std::vector<double> analytic_dr =
        exact_dr_mse_gradient(mdp, behavior, eval, model);
    if (corrupt_score) {
      for (double& g : analytic_dr) g += 0.01;
    }
    report.max_rel_err_dr = std::max(
        report.max_rel_err_dr,
        max_relative_error(
            analytic_dr,
            exact_dr_mse_fd_gradient(mdp, behavior, eval, model)));
    report.mdps_checked += 1;
  }

  // Two-armed bandit, rewards 2 and 1, both policies uniform:
  // d E[IS^2] / d p_1 = r_2^2 - r_1^2 = -3 at p_1 = 1/2.
  TabularMDP bandit(2, 2, 0, 0, 1.0);
  bandit.set_transition(0, 0, 1, 1.0);
  bandit.set_reward(0, 0, 1, 2.0);
  bandit.set_transition(0, 1, 1, 1.0);
  bandit.set_reward(0, 1, 1, 1.0);
  bandit.set_transition(1, 0, 1, 1.0);
  bandit.set_transition(1, 1, 1, 1.0);
  bandit.add_terminal(1);
  bandit.validate();
  const SoftmaxPolicy uniform = SoftmaxPolicy::uniform(2, 2);
  const std::vector<double> grad =
      exact_is_mse_gradient(bandit, uniform, uniform);
  // Chain rule through the softmax: d p_1 / d theta_{0,0} = p_1 (1 - p_1).
  report.bandit_gradient = grad[0] / 0.25;

  report.passed = report.max_rel_err_is <= tol_is &&
                  report.max_rel_err_dr <= tol_dr &&
                  std::abs(report.bandit_gradient + 3.0) <= 1e-6;
  return report;
}

// --- Experiment runs -------------------------------------------------------

std::string RunSummary::to_json() const {
  nlohmann::json j;
  j["true_value"] = true_value;
  j["trials"] = trials;
  j["diverged_trials"] = diverged_trials;
  j["mean_initial_variance"] = mean_initial_variance;
  j["mean_final_variance"] = mean_final_variance;
  j["mean_final_estimate"] = mean_final_estimate;
  return j.dump(2);
}

namespace {

struct TrialResult {
  EstimateSeries series;
  std::vector<double> final_theta;
  bool diverged = false;
  double initial_variance = 0.0;
  double final_variance = 0.0;
  double final_estimate = 0.0;
};

BPGConfig make_bpg_config(const ExperimentConfig& config, double alpha,
                          const ResolvedSetup& setup, uint64_t root_seed) {
  BPGConfig bc;
  bc.eval_theta = setup.eval_theta;
  bc.batch_size = config.batch_size;
  bc.step_size = alpha;
  bc.iterations = config.iterations;
  bc.baseline_enabled = config.baseline_enabled;
  bc.root_seed = root_seed;
  bc.estimator = parse_estimator(config.estimator);
  bc.model_mode = parse_model_mode(config.model_mode);
  bc.warmup_iterations = config.warmup_iterations;
  bc.zero_model = config.zero_model;
  return bc;
}

// One search run plus the paired before/after variance probes. The probe
// stream depends only on (config.seed, trial), so runs with alpha = 0 probe
// identical trajectories and measure an exact zero change.
TrialResult run_trial(const TabularMDP& mdp, const ResolvedSetup& setup,
                      const ExperimentConfig& config, double alpha,
                      int trial) {
  const uint64_t trial_seed = derive_seed(config.seed, trial);
  const uint64_t probe_seed = derive_seed(config.seed, trial, kProbeStream);
  const double gamma = mdp.discount();
  const SoftmaxPolicy eval(mdp.num_states(), mdp.num_actions(),
                           setup.eval_theta);
  const BPGConfig bc = make_bpg_config(config, alpha, setup, trial_seed);

  TrialResult out;
  const TabularModel* probe_model = nullptr;
  TabularModel model(mdp.num_states(), mdp.num_actions());
  if (bc.estimator == EstimatorKind::IS) {
    BPGResult run = bpg_run(mdp, bc);
    out.series = std::move(run.series);
    out.final_theta = std::move(run.final_theta);
    out.diverged = run.diverged;
    if (config.holdout > 0 && !run.diverged) {
      const SoftmaxPolicy final_policy(mdp.num_states(), mdp.num_actions(),
                                       out.final_theta);
      double sum = 0.0;
      for (size_t i = 0; i < run.dataset.size(); ++i) {
        sum += is_estimate(run.dataset.trajectory(i), eval,
                           run.dataset.behavior(i), gamma);
      }
      for (int j = 0; j < config.holdout; ++j) {
        const Trajectory traj = sample_trajectory(
            mdp, final_policy, derive_seed(trial_seed, config.iterations, j));
        sum += is_estimate(traj, eval, final_policy, gamma);
      }
      out.final_estimate =
          sum / static_cast<double>(run.dataset.size() + config.holdout);
    } else if (!out.series.records.empty()) {
      out.final_estimate = out.series.records.back().estimate;
    }
  } else {
    DRBPGResult run = dr_bpg_run(mdp, bc);
    out.series = std::move(run.run.series);
    out.final_theta = std::move(run.run.final_theta);
    out.diverged = run.run.diverged;
    model = std::move(run.model);
    probe_model = &model;
    if (!out.series.records.empty()) {
      out.final_estimate = out.series.records.back().estimate;
    }
  }

  const SoftmaxPolicy initial(mdp.num_states(), mdp.num_actions(),
                              setup.eval_theta);
  const SoftmaxPolicy final_policy(mdp.num_states(), mdp.num_actions(),
                                   out.final_theta);
  out.initial_variance =
      variance_probe(mdp, initial, eval, gamma, bc.estimator, probe_model,
                     config.probe_samples, config.probe_repeats, probe_seed);
  out.final_variance = variance_probe(
      mdp, out.diverged ? initial : final_policy, eval, gamma, bc.estimator,
      probe_model, config.probe_samples, config.probe_repeats, probe_seed);
  return out;
}

std::string variance_csv(const std::vector<TrialResult>& results) {
  std::string out = std::string("# ") + kVersionString +
                    "\ntrial,initial_variance,final_variance,"
                    "relative_decrease,diverged\n";
  for (size_t t = 0; t < results.size(); ++t) {
    const TrialResult& r = results[t];
    const double rel =
        r.initial_variance > 1e-12
            ? (r.initial_variance - r.final_variance) / r.initial_variance
            : 0.0;
    out += std::to_string(t) + "," + format_double(r.initial_variance) + "," +
           format_double(r.final_variance) + "," + format_double(rel) + "," +
           (r.diverged ? "1" : "0") + "\n";
  }
  return out;
}

std::string aggregate_csv(const std::vector<TrialResult>& results,
                          double true_value) {
  size_t min_len = SIZE_MAX;
  for (const TrialResult& r : results) {
    min_len = std::min(min_len, r.series.records.size());
  }
  if (min_len == SIZE_MAX) min_len = 0;
  std::string out = std::string("# ") + kVersionString +
                    "\niteration,mean_estimate,mse,mean_sq_moment\n";
  for (size_t i = 0; i < min_len; ++i) {
    double mean = 0.0;
    double mse = 0.0;
    double sq = 0.0;
    for (const TrialResult& r : results) {
      const EstimateRecord& rec = r.series.records[i];
      mean += rec.estimate;
      const double err = rec.estimate - true_value;
      mse += err * err;
      sq += rec.sq_moment;
    }
    const double n = static_cast<double>(results.size());
    out += std::to_string(i) + "," + format_double(mean / n) + "," +
           format_double(mse / n) + "," + format_double(sq / n) + "\n";
  }
  return out;
}

RunSummary summarize(const std::vector<TrialResult>& results,
                     double true_value) {
  RunSummary s;
  s.true_value = true_value;
  s.trials = static_cast<int>(results.size());
  for (const TrialResult& r : results) {
    if (r.diverged) s.diverged_trials += 1;
    s.mean_initial_variance += r.initial_variance / results.size();
    s.mean_final_variance += r.final_variance / results.size();
    s.mean_final_estimate += r.final_estimate / results.size();
  }
  return s;
}

void write_manifest(const std::filesystem::path& dir,
                    const ExperimentConfig& config, const RunSummary& summary,
                    const std::vector<std::string>& files) {
  nlohmann::json j;
  j["version"] = kVersionString;
  j["command"] = config.name;
  j["config"] = nlohmann::json::parse(config.to_json());
  // Worker count never affects results; keep it out of the record so runs
  // differing only in parallelism produce identical outputs.
  j["config"].erase("workers");
  j["summary"] = nlohmann::json::parse(summary.to_json());
  j["files"] = files;
  write_file(dir / "manifest.json", j.dump(2) + "\n");
}

std::filesystem::path prepare_out_dir(const std::string& out_dir) {
  std::filesystem::path dir(out_dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

RunSummary run_bpg_experiment(const ExperimentConfig& config,
                              const std::string& out_dir) {
  const ResolvedSetup setup = resolve_setup(config);
  const std::filesystem::path dir = prepare_out_dir(out_dir);

  std::vector<TrialResult> results(config.trials);
  parallel_for(config.trials, config.workers, [&](int t) {
    results[t] = run_trial(setup.mdp, setup, config, config.step_size, t);
  });

  std::vector<std::string> files;
  for (int t = 0; t < config.trials; ++t) {
    const std::string csv_name = "trial_" + std::to_string(t) + ".csv";
    write_file(dir / csv_name, results[t].series.to_csv());
    files.push_back(csv_name);
    const std::string theta_name =
        "final_theta_" + std::to_string(t) + ".json";
    const SoftmaxPolicy final_policy(setup.mdp.num_states(),
                                     setup.mdp.num_actions(),
                                     results[t].final_theta);
    write_file(dir / theta_name, final_policy.to_json());
    files.push_back(theta_name);
  }
  write_file(dir / "aggregate.csv", aggregate_csv(results, setup.true_value));
  files.push_back("aggregate.csv");
  write_file(dir / "variance.csv", variance_csv(results));
  files.push_back("variance.csv");

  const RunSummary summary = summarize(results, setup.true_value);
  write_manifest(dir, config, summary, files);
  return summary;
}

RunSummary run_dr_bpg_experiment(const ExperimentConfig& config,
                                 const std::string& out_dir) {
  const ResolvedSetup setup = resolve_setup(config);
  const std::filesystem::path dir = prepare_out_dir(out_dir);

  struct Arm {
    const char* name;
    std::string estimator;
    std::string model_mode;
    bool zero_model;
  };
  const Arm arms[] = {{"is", "IS", "fixed", false},
                      {"dr_fixed", "DR", "fixed", false},
                      {"dr_update", "DR", "update", false},
                      {"dr_zero", "DR", "fixed", true}};

  std::vector<std::string> files;
  RunSummary headline;
  std::string final_csv = std::string("# ") + kVersionString +
                          "\narm,trial,initial_variance,final_variance,"
                          "relative_decrease,diverged\n";
  for (const Arm& arm : arms) {
    ExperimentConfig arm_config = config;
    arm_config.estimator = arm.estimator;
    arm_config.model_mode = arm.model_mode;
    arm_config.zero_model = arm.zero_model;

    std::vector<TrialResult> results(config.trials);
    parallel_for(config.trials, config.workers, [&](int t) {
      results[t] =
          run_trial(setup.mdp, setup, arm_config, config.step_size, t);
    });

    const std::string mse_name = std::string("arm_") + arm.name + "_mse.csv";
    write_file(dir / mse_name, aggregate_csv(results, setup.true_value));
    files.push_back(mse_name);
    for (size_t t = 0; t < results.size(); ++t) {
      const TrialResult& r = results[t];
      const double rel =
          r.initial_variance > 1e-12
              ? (r.initial_variance - r.final_variance) / r.initial_variance
              : 0.0;
      final_csv += std::string(arm.name) + "," + std::to_string(t) + "," +
                   format_double(r.initial_variance) + "," +
                   format_double(r.final_variance) + "," +
                   format_double(rel) + "," + (r.diverged ? "1" : "0") + "\n";
    }
    if (std::string(arm.name) == "dr_fixed") {
      headline = summarize(results, setup.true_value);
    }
  }
  write_file(dir / "final_variance.csv", final_csv);
  files.push_back("final_variance.csv");
  write_manifest(dir, config, headline, files);
  return headline;
}

RunSummary run_sweep_lr_experiment(const ExperimentConfig& config,
                                   const std::string& out_dir) {
  const ResolvedSetup setup = resolve_setup(config);
  const std::filesystem::path dir = prepare_out_dir(out_dir);
  const std::vector<double> alphas =
      config.alphas.empty() ? std::vector<double>{0.0, config.step_size}
                            : config.alphas;

  std::string csv = std::string("# ") + kVersionString +
                    "\nalpha,trial,initial_variance,final_variance,"
                    "relative_decrease,diverged\n";
  std::vector<std::string> files;
  std::vector<TrialResult> all;
  for (double alpha : alphas) {
    std::vector<TrialResult> results(config.trials);
    parallel_for(config.trials, config.workers, [&](int t) {
      results[t] = run_trial(setup.mdp, setup, config, alpha, t);
    });
    for (size_t t = 0; t < results.size(); ++t) {
      const TrialResult& r = results[t];
      const double rel =
          r.initial_variance > 1e-12
              ? (r.initial_variance - r.final_variance) / r.initial_variance
              : 0.0;
      csv += format_double(alpha) + "," + std::to_string(t) + "," +
             format_double(r.initial_variance) + "," +
             format_double(r.final_variance) + "," + format_double(rel) +
             "," + (r.diverged ? "1" : "0") + "\n";
    }
    all.insert(all.end(), results.begin(), results.end());
  }
  write_file(dir / "sweep.csv", csv);
  files.push_back("sweep.csv");
  const RunSummary summary = summarize(all, setup.true_value);
  write_manifest(dir, config, summary, files);
  return summary;
}

RunSummary run_rare_event_experiment(const ExperimentConfig& config,
                                     const std::string& out_dir) {
  const std::filesystem::path dir = prepare_out_dir(out_dir);
  const std::vector<double> probs =
      config.rare_probs.empty() ? std::vector<double>{0.1, 0.9, 1.0}
                                : config.rare_probs;

  // The base policy is resolved on the deterministic grid; each p then
  // fixes how often the evaluation policy takes UP at the start, which is
  // what makes the +50 episode rare or common.
  ExperimentConfig base_config = config;
  base_config.environment = "det4x4";
  const ResolvedSetup base = resolve_setup(base_config);
  const TabularMDP mdp = make_environment("rare_event", config.rare_p);

  std::string csv = std::string("# ") + kVersionString +
                    "\np,trial,initial_variance,final_variance,"
                    "relative_decrease,diverged\n";
  std::vector<std::string> files;
  std::vector<TrialResult> all;
  double true_value = 0.0;
  for (double p : probs) {
    ResolvedSetup setup{mdp,
                        with_start_action_probability(mdp, base.eval_theta,
                                                      kGridUp, p),
                        0.0};
    setup.true_value = policy_value(
        mdp, SoftmaxPolicy(mdp.num_states(), mdp.num_actions(),
                           setup.eval_theta));
    true_value = setup.true_value;
    std::vector<TrialResult> results(config.trials);
    parallel_for(config.trials, config.workers, [&](int t) {
      results[t] = run_trial(setup.mdp, setup, config, config.step_size, t);
    });
    for (size_t t = 0; t < results.size(); ++t) {
      const TrialResult& r = results[t];
      const double rel =
          r.initial_variance > 1e-12
              ? (r.initial_variance - r.final_variance) / r.initial_variance
              : 0.0;
      csv += format_double(p) + "," + std::to_string(t) + "," +
             format_double(r.initial_variance) + "," +
             format_double(r.final_variance) + "," + format_double(rel) +
             "," + (r.diverged ? "1" : "0") + "\n";
    }
    all.insert(all.end(), results.begin(), results.end());
  }
  write_file(dir / "rare_event.csv", csv);
  files.push_back("rare_event.csv");
  const RunSummary summary = summarize(all, true_value);
  write_manifest(dir, config, summary, files);
  return summary;
}

}  // namespace bps
