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

// Experiment driver. Talks to the library strictly through the C API so
// the shared library surface stays exercised end to end.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "bps/bps.h"
#include "json.hpp"

namespace {

constexpr int kExitSuccess = 0;
constexpr int kExitConfig = 1;     // bad arguments, config, or environment
constexpr int kExitTolerance = 2;  // gradcheck exceeded its tolerance
constexpr int kExitDiverged = 3;   // every trial of a run diverged

int status_to_exit(bps_status status) {
  switch (status) {
    case BPS_OK:
      return kExitSuccess;
    case BPS_ERR_TOLERANCE:
      return kExitTolerance;
    case BPS_ERR_DIVERGED:
      return kExitDiverged;
    default:
      return kExitConfig;
  }
}

int run_command(const std::string& command, const std::string& config_path,
                const std::string& out_dir, const nlohmann::json& overrides) {
  std::ifstream in(config_path, std::ios::binary);
  if (!in) {
    std::cerr << "error: cannot read config: " << config_path << "\n";
    return kExitConfig;
  }
  std::stringstream buffer;
  buffer << in.rdbuf();

  nlohmann::json config;
  try {
    config = nlohmann::json::parse(buffer.str());
  } catch (const nlohmann::json::parse_error& e) {
    std::cerr << "error: config is not valid JSON: " << e.what() << "\n";
    return kExitConfig;
  }
  for (const auto& [key, value] : overrides.items()) {
    config[key] = value;
  }
  config["name"] = command;

  char* summary = nullptr;
  const bps_status status =
      bps_run_command(command.c_str(), config.dump().c_str(),
                      out_dir.empty() ? nullptr : out_dir.c_str(), &summary);
  if (summary != nullptr) {
    std::cout << summary << "\n";
    bps_string_free(summary);
  }
  if (status != BPS_OK) {
    std::cerr << "error: " << bps_strerror(status) << ": " << bps_last_error()
              << "\n";
  }
  return status_to_exit(status);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string(bps_version()) +
               " - behavior policy search experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  uint64_t seed = 0;
  int trials = 0;
  int workers = 0;
  int holdout = -1;
  bool seed_set = false;

  for (const std::string& name :
       {std::string("gradcheck"), std::string("bpg"), std::string("dr-bpg"),
        std::string("sweep-lr"), std::string("rare-event")}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "experiment config (JSON)")
        ->required();
    sub->add_option("--out", out_dir, "output directory for CSVs");
    sub->add_option("--seed", seed, "root seed override")
        ->each([&](const std::string&) { seed_set = true; });
    sub->add_option("--trials", trials, "trial count override");
    sub->add_option("--workers", workers, "sampling worker count");
    sub->add_option("--holdout", holdout,
                    "extra final-policy trajectories for the last estimate");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitSuccess : kExitConfig;
  }

  nlohmann::json overrides = nlohmann::json::object();
  if (seed_set) overrides["seed"] = seed;
  if (trials > 0) overrides["trials"] = trials;
  if (workers > 0) overrides["workers"] = workers;
  if (holdout >= 0) overrides["holdout"] = holdout;

  const std::string command = app.get_subcommands().front()->get_name();
  if (command != "gradcheck" && out_dir.empty()) {
    std::cerr << "error: " << command << " requires --out\n";
    return kExitConfig;
  }
  return run_command(command, config_path, out_dir, overrides);
}
