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

// Exercises the shared library through its C surface only.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstring>
#include <string>

#include "bps/bps.h"
#include "json.hpp"

TEST_CASE("version and error strings are stable") {
  CHECK(std::string(bps_version()) == "bps-lab v0.1.0");
  CHECK(std::string(bps_strerror(BPS_OK)) == "ok");
  CHECK(std::string(bps_strerror(BPS_ERR_DIVERGED)) == "search diverged");
  CHECK(std::string(bps_strerror(12345)) == "unknown status");
}

TEST_CASE("mdp handles round trip through JSON") {
  bps_mdp_t* mdp = nullptr;
  REQUIRE(bps_mdp_create("det4x4", 1.0, &mdp) == BPS_OK);
  int states = 0;
  int actions = 0;
  CHECK(bps_mdp_num_states(mdp, &states) == BPS_OK);
  CHECK(bps_mdp_num_actions(mdp, &actions) == BPS_OK);
  CHECK(states == 16);
  CHECK(actions == 4);

  char* json = nullptr;
  REQUIRE(bps_mdp_to_json(mdp, &json) == BPS_OK);
  bps_mdp_t* copy = nullptr;
  REQUIRE(bps_mdp_from_json(json, &copy) == BPS_OK);
  int copy_states = 0;
  CHECK(bps_mdp_num_states(copy, &copy_states) == BPS_OK);
  CHECK(copy_states == 16);
  bps_string_free(json);
  bps_mdp_free(copy);
  bps_mdp_free(mdp);
}

TEST_CASE("invalid variants and null arguments are rejected") {
  bps_mdp_t* mdp = nullptr;
  CHECK(bps_mdp_create("bogus", 1.0, &mdp) == BPS_ERR_INVALID_ARGUMENT);
  CHECK(std::strlen(bps_last_error()) > 0);
  CHECK(bps_mdp_create(nullptr, 1.0, &mdp) == BPS_ERR_INVALID_ARGUMENT);
  CHECK(bps_mdp_create("rare_event", 2.0, &mdp) == BPS_ERR_INVALID_ARGUMENT);
  CHECK(bps_mdp_from_json("not json", &mdp) != BPS_OK);
  CHECK(bps_mdp_num_states(nullptr, nullptr) == BPS_ERR_INVALID_ARGUMENT);
}

TEST_CASE("policy value matches the frozen DP oracle") {
  bps_mdp_t* mdp = nullptr;
  REQUIRE(bps_mdp_create("det4x4", 1.0, &mdp) == BPS_OK);
  bps_policy_t* uniform = nullptr;
  REQUIRE(bps_policy_softmax(16, 4, nullptr, &uniform) == BPS_OK);
  double value = 0.0;
  REQUIRE(bps_policy_value(mdp, uniform, &value) == BPS_OK);
  CHECK(value == doctest::Approx(-72.62811949360628).epsilon(1e-12));

  char* json = nullptr;
  REQUIRE(bps_policy_to_json(uniform, &json) == BPS_OK);
  bps_policy_t* copy = nullptr;
  REQUIRE(bps_policy_from_json(json, &copy) == BPS_OK);
  double copy_value = 0.0;
  REQUIRE(bps_policy_value(mdp, copy, &copy_value) == BPS_OK);
  CHECK(copy_value == value);
  bps_string_free(json);
  bps_policy_free(copy);
  bps_policy_free(uniform);
  bps_mdp_free(mdp);
}

TEST_CASE("eval policy generation is seed-stable across calls") {
  bps_mdp_t* mdp = nullptr;
  REQUIRE(bps_mdp_create("det4x4", 1.0, &mdp) == BPS_OK);
  bps_policy_t* pi1 = nullptr;
  bps_policy_t* pi2 = nullptr;
  REQUIRE(bps_make_eval_policies(mdp, 9001, &pi1, &pi2) == BPS_OK);
  double v1 = 0.0;
  double v2 = 0.0;
  REQUIRE(bps_policy_value(mdp, pi1, &v1) == BPS_OK);
  REQUIRE(bps_policy_value(mdp, pi2, &v2) == BPS_OK);
  CHECK(v2 >= v1);
  CHECK(v1 >= 0.5 * v2);
  // Frozen oracle: the partially optimized policy under seed 9001.
  CHECK(v1 == doctest::Approx(78.86442909156969).epsilon(1e-12));

  bps_policy_t* again1 = nullptr;
  bps_policy_t* again2 = nullptr;
  REQUIRE(bps_make_eval_policies(mdp, 9001, &again1, &again2) == BPS_OK);
  char* a = nullptr;
  char* b = nullptr;
  REQUIRE(bps_policy_to_json(pi1, &a) == BPS_OK);
  REQUIRE(bps_policy_to_json(again1, &b) == BPS_OK);
  CHECK(std::string(a) == std::string(b));
  bps_string_free(a);
  bps_string_free(b);
  bps_policy_free(pi1);
  bps_policy_free(pi2);
  bps_policy_free(again1);
  bps_policy_free(again2);
  bps_mdp_free(mdp);
}

TEST_CASE("run_command executes gradcheck and reports failures") {
  char* summary = nullptr;
  REQUIRE(bps_run_command("gradcheck", "{\"seed\": 4242}", nullptr,
                          &summary) == BPS_OK);
  const nlohmann::json report = nlohmann::json::parse(summary);
  CHECK(report["passed"].get<bool>());
  CHECK(report["bandit_gradient"].get<double>() ==
        doctest::Approx(-3.0).epsilon(1e-9));
  bps_string_free(summary);

  char* none = nullptr;
  CHECK(bps_run_command("no-such-command", "{}", "/tmp", &none) ==
        BPS_ERR_INVALID_ARGUMENT);
  CHECK(bps_run_command("bpg", "{}", nullptr, &none) ==
        BPS_ERR_INVALID_ARGUMENT);
  CHECK(bps_run_command(nullptr, "{}", nullptr, &none) ==
        BPS_ERR_INVALID_ARGUMENT);
  CHECK(bps_run_command("bpg", "{\"batch_size\": 0}", "/tmp", &none) ==
        BPS_ERR_INVALID_ARGUMENT);
}
