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

#include <unistd.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "bps/experiments.hpp"
#include "json.hpp"

using namespace bps;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("bps-test-" + std::to_string(::getpid()) + "-" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static std::atomic<int>& counter() {
    static std::atomic<int> value{0};
    return value;
  }
};

}  // namespace

TEST_CASE("experiment config JSON round trip keeps every field") {
  ExperimentConfig config;
  config.name = "sweep-lr";
  config.environment = "stoch6x6_jump";
  config.rare_p = 0.5;
  config.eval_policy = "pi2";
  config.reinforce_seed = 7;
  config.batch_size = 33;
  config.step_size = 2e-4;
  config.iterations = 12;
  config.baseline_enabled = false;
  config.estimator = "DR";
  config.model_mode = "update";
  config.warmup_iterations = 4;
  config.zero_model = true;
  config.trials = 9;
  config.seed = 555;
  config.workers = 3;
  config.holdout = 100;
  config.probe_samples = 200;
  config.probe_repeats = 2;
  config.alphas = {0.0, 1e-5};
  config.rare_probs = {0.1, 0.9};
  const ExperimentConfig copy = ExperimentConfig::from_json(config.to_json());
  CHECK(copy.to_json() == config.to_json());
  CHECK(copy.environment == "stoch6x6_jump");
  CHECK(copy.alphas == config.alphas);
  CHECK(copy.rare_probs == config.rare_probs);
}

TEST_CASE("config defaults survive a sparse JSON document") {
  const ExperimentConfig config = ExperimentConfig::from_json("{}");
  CHECK(config.environment == "det4x4");
  CHECK(config.eval_policy == "pi1");
  CHECK(config.batch_size == 100);
  CHECK(config.rare_p == 1.0);
  CHECK_NOTHROW(config.validate());
}

TEST_CASE("config validation rejects malformed values") {
  ExperimentConfig config;
  config.batch_size = 0;
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
  config = ExperimentConfig();
  config.environment = "nonexistent";
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
  config = ExperimentConfig();
  config.rare_p = 0.0;
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
  config = ExperimentConfig();
  config.rare_probs = {1.5};
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
  config = ExperimentConfig();
  config.probe_samples = 1;
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
}

TEST_CASE("environments resolve by name and stay stochastic-valid") {
  CHECK(make_environment("det4x4").num_states() == 16);
  CHECK(make_environment("stoch10x10").num_states() == 100);
  CHECK(make_environment("stoch6x6").num_states() == 36);
  CHECK_THROWS_AS(make_environment("bogus"), std::invalid_argument);

  const TabularMDP jump = make_environment("stoch6x6_jump");
  CHECK(jump.num_states() == 36);
  const int start = jump.start_state();
  const int term = *jump.terminal_states().begin();
  // Jump: UP at the start reaches the terminal with probability 0.1 on top
  // of the rescaled slip row; reward on that edge is +150.
  CHECK(jump.transition(start, kGridUp, term) >= 0.1);
  CHECK(jump.reward(start, kGridUp, term) == 150.0);
  double row_sum = 0.0;
  for (int n = 0; n < jump.num_states(); ++n) {
    row_sum += jump.transition(start, kGridUp, n);
  }
  CHECK(row_sum == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_NOTHROW(jump.validate());
}

TEST_CASE("start-action probability override renormalizes one row") {
  const TabularMDP mdp = make_environment("det4x4");
  const int A = mdp.num_actions();
  std::vector<double> theta(static_cast<size_t>(mdp.num_states()) * A, 0.0);
  theta[kGridDown] = 1.0;  // skew the start row
  const std::vector<double> adjusted =
      with_start_action_probability(mdp, theta, kGridUp, 0.3);
  const SoftmaxPolicy policy(mdp.num_states(), A, adjusted);
  CHECK(policy.prob(0, mdp.start_state(), kGridUp) ==
        doctest::Approx(0.3).epsilon(1e-9));
  // Non-start rows are untouched.
  for (int a = 0; a < A; ++a) {
    CHECK(adjusted[5 * A + a] == theta[5 * A + a]);
  }
  // Remaining actions keep their relative masses.
  const SoftmaxPolicy base(mdp.num_states(), A, theta);
  const double ratio_base = base.prob(0, 0, kGridDown) / base.prob(0, 0, kGridLeft);
  const double ratio_adj =
      policy.prob(0, 0, kGridDown) / policy.prob(0, 0, kGridLeft);
  CHECK(ratio_adj == doctest::Approx(ratio_base).epsilon(1e-9));
  CHECK_THROWS_AS(with_start_action_probability(mdp, theta, kGridUp, 0.0),
                  std::invalid_argument);
}

TEST_CASE("resolved setups expose the DP oracle value") {
  ExperimentConfig config;
  config.eval_policy = "uniform";
  const ResolvedSetup setup = resolve_setup(config);
  CHECK(setup.true_value ==
        doctest::Approx(-72.62811949360628).epsilon(1e-12));
  CHECK(setup.eval_theta.size() ==
        static_cast<size_t>(setup.mdp.num_states()) *
            setup.mdp.num_actions());
}

TEST_CASE("variance probe is deterministic and tracks the exact variance") {
  // Two-armed bandit with rewards 2 and 1.
  TabularMDP bandit(2, 2, 0, 0, 1.0);
  bandit.set_transition(0, 0, 1, 1.0);
  bandit.set_reward(0, 0, 1, 2.0);
  bandit.set_transition(0, 1, 1, 1.0);
  bandit.set_reward(0, 1, 1, 1.0);
  bandit.add_terminal(1);
  bandit.validate();
  const SoftmaxPolicy uniform = SoftmaxPolicy::uniform(1, 2);
  const double a =
      variance_probe(bandit, uniform, uniform, 1.0, EstimatorKind::IS,
                     nullptr, 5000, 2, 77);
  const double b =
      variance_probe(bandit, uniform, uniform, 1.0, EstimatorKind::IS,
                     nullptr, 5000, 2, 77);
  CHECK(a == b);
  const double exact = exact_is_variance(bandit, uniform, uniform);
  CHECK(a == doctest::Approx(exact).epsilon(0.1));
  CHECK_THROWS_AS(variance_probe(bandit, uniform, uniform, 1.0,
                                 EstimatorKind::IS, nullptr, 1, 1, 0),
                  std::invalid_argument);
}

TEST_CASE("gradcheck passes and its negative control fails") {
  const GradcheckReport good = run_gradcheck(1234, 5);
  CHECK(good.passed);
  CHECK(good.mdps_checked == 5);
  CHECK(good.max_rel_err_is < 1e-6);
  CHECK(good.max_rel_err_dr < 1e-5);
  CHECK(good.bandit_gradient == doctest::Approx(-3.0).epsilon(1e-9));
  const GradcheckReport bad = run_gradcheck(1234, 5, 1e-6, 1e-5, true);
  CHECK_FALSE(bad.passed);
  // The report is valid JSON with the expected keys.
  const nlohmann::json j = nlohmann::json::parse(good.to_json());
  CHECK(j.contains("max_rel_err_is"));
  CHECK(j.contains("bandit_gradient"));
  CHECK(j["passed"].get<bool>());
}

TEST_CASE("parallel_for covers every index and propagates exceptions") {
  std::vector<int> hits(100, 0);
  parallel_for(100, 4, [&](int i) { hits[i] = i * i; });
  for (int i = 0; i < 100; ++i) CHECK(hits[i] == i * i);
  std::vector<int> serial(100, 0);
  parallel_for(100, 1, [&](int i) { serial[i] = i * i; });
  CHECK(serial == hits);
  CHECK_THROWS_AS(
      parallel_for(10, 3,
                   [](int i) {
                     if (i == 7) throw std::runtime_error("boom");
                   }),
      std::runtime_error);
}

TEST_CASE("format_double is round-trip exact") {
  for (double v : {1.0 / 3.0, -72.62811949360628, 0.0, 1e-300, 12345.678}) {
    CHECK(std::stod(format_double(v)) == v);
  }
}

TEST_CASE("bpg experiment writes its artifact set") {
  TempDir dir;
  ExperimentConfig config;
  config.environment = "det4x4";
  config.eval_policy = "uniform";
  config.batch_size = 10;
  config.iterations = 3;
  config.step_size = 0.0;
  config.trials = 2;
  config.seed = 99;
  config.probe_samples = 50;
  config.probe_repeats = 1;
  const RunSummary summary = run_bpg_experiment(config, dir.path.string());
  CHECK(summary.trials == 2);
  CHECK(summary.diverged_trials == 0);
  CHECK(summary.true_value == doctest::Approx(-72.62811949360628));
  for (const char* name :
       {"trial_0.csv", "trial_1.csv", "final_theta_0.json",
        "final_theta_1.json", "aggregate.csv", "variance.csv",
        "manifest.json"}) {
    CHECK(fs::exists(dir.path / name));
  }
  const std::string trial = slurp(dir.path / "trial_0.csv");
  CHECK(trial.rfind("# bps-lab v0.1.0\n", 0) == 0);
  const nlohmann::json manifest =
      nlohmann::json::parse(slurp(dir.path / "manifest.json"));
  CHECK(manifest["version"] == "bps-lab v0.1.0");
  // Worker count must not enter the recorded configuration: outputs are
  // identical across worker counts and the manifest asserts as much.
  CHECK_FALSE(manifest["config"].contains("workers"));
  // Zero step size: every trial's variance change is exactly zero.
  const nlohmann::json summary_json =
      nlohmann::json::parse(summary.to_json());
  CHECK(summary_json["mean_final_variance"].get<double>() ==
        doctest::Approx(summary_json["mean_initial_variance"].get<double>()));
}

namespace {

// Parses a "# version" headed CSV into rows of doubles, skipping the two
// header lines.
std::vector<std::vector<double>> parse_csv(const fs::path& file) {
  std::ifstream in(file);
  std::string line;
  std::vector<std::vector<double>> rows;
  int line_no = 0;
  while (std::getline(in, line)) {
    if (++line_no <= 2) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

TEST_CASE("aggregate csv matches recomputation from trial csvs") {
  TempDir dir;
  ExperimentConfig config;
  config.environment = "det4x4";
  config.eval_policy = "uniform";
  config.batch_size = 8;
  config.iterations = 5;
  config.step_size = 1e-5;
  config.trials = 3;
  config.seed = 424;
  config.probe_samples = 50;
  config.probe_repeats = 1;
  const RunSummary summary = run_bpg_experiment(config, dir.path.string());
  const double rho = summary.true_value;
  std::vector<std::vector<std::vector<double>>> trials;
  for (int t = 0; t < config.trials; ++t) {
    trials.push_back(
        parse_csv(dir.path / ("trial_" + std::to_string(t) + ".csv")));
  }
  const std::vector<std::vector<double>> agg =
      parse_csv(dir.path / "aggregate.csv");
  REQUIRE(agg.size() == static_cast<size_t>(config.iterations));
  for (size_t i = 0; i < agg.size(); ++i) {
    double mean = 0.0;
    double mse = 0.0;
    double sq = 0.0;
    for (const auto& rows : trials) {
      REQUIRE(rows.size() == agg.size());
      mean += rows[i][1];
      mse += (rows[i][1] - rho) * (rows[i][1] - rho);
      sq += rows[i][2];
    }
    mean /= config.trials;
    mse /= config.trials;
    sq /= config.trials;
    CHECK(agg[i][0] == doctest::Approx(static_cast<double>(i)));
    CHECK(std::abs(agg[i][1] - mean) <= 1e-12);
    CHECK(std::abs(agg[i][2] - mse) <= 1e-12 * std::max(1.0, std::abs(mse)));
    CHECK(std::abs(agg[i][3] - sq) <= 1e-12 * std::max(1.0, std::abs(sq)));
  }
}
