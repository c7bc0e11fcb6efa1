/*
 * Copyright (c) 2026, The mtsim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include <chrono>
#include <set>
#include <json.hpp>

#include "mtsim/attack.hpp"

using namespace mtsim;

namespace {

const std::vector<Profile> kProfiles = {Profile::Unprotected, Profile::MuonTrap, Profile::MuonTrapClear};

std::vector<std::string> all_names() {
  std::vector<std::string> v;
  for (const Scenario& s : scenario_catalog()) v.push_back(s.name);
  return v;
}

Tick latency_of(const ObservationTrace& t, const std::string& label) {
  for (const Probe& p : t) {
    if (p.label == label) return p.latency;
  }
  ADD_FAILURE() << "no probe " << label;
  return 0;
}

}  // namespace

TEST(Attack, CatalogHasTwelveUniqueScenarios) {
  const auto names = all_names();
  EXPECT_EQ(names.size(), 12u);
  std::set<std::string> uniq(names.begin(), names.end());
  EXPECT_EQ(uniq.size(), names.size());
  EXPECT_THROW(find_scenario("nope"), SimError);
}

TEST(Attack, EveryScenarioLeaksUnprotected) {
  for (const Scenario& s : scenario_catalog()) {
    const LeakVerdict v = leak_oracle(s, Profile::Unprotected);
    EXPECT_TRUE(v.leaks) << s.name;
    EXPECT_TRUE(v.witness.has_value()) << s.name;
  }
}

TEST(Attack, ProtectedProfilesSealAllButEarlyReplacement) {
  for (const Scenario& s : scenario_catalog()) {
    EXPECT_EQ(leak_oracle(s, Profile::MuonTrap).leaks, s.name == "early_replacement") << s.name;
    EXPECT_FALSE(leak_oracle(s, Profile::MuonTrapClear).leaks) << s.name;
  }
}

TEST(Attack, BlockingUncommittedEvictionSealsEarlyReplacement) {
  const Scenario& s = find_scenario("early_replacement");
  ScenarioOptions o;
  o.block_uncommitted_eviction = true;
  EXPECT_FALSE(leak_oracle(s, Profile::MuonTrap, o).leaks);
  EXPECT_TRUE(leak_oracle(s, Profile::Unprotected, o).leaks);
}

TEST(Attack, MatrixMatchesExpectationsQuickly) {
  for (bool block : {false, true}) {
    ScenarioOptions o;
    o.block_uncommitted_eviction = block;
    const auto t0 = std::chrono::steady_clock::now();
    const auto cells = attack_matrix(all_names(), kProfiles, o);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    ASSERT_EQ(cells.size(), 36u);
    for (const MatrixCell& c : cells) EXPECT_TRUE(c.matches()) << c.scenario << " " << to_string(c.profile);
    EXPECT_LT(secs, 10.0);
  }
}

TEST(Attack, PrimeProbeGapIsAtLeastL2MinusL1) {
  const Scenario& s = find_scenario("spectre_prime_probe");
  const ObservationTrace hit = run_scenario(s, 0, Profile::Unprotected);
  const ObservationTrace miss = run_scenario(s, 1, Profile::Unprotected);
  const Tick fast = latency_of(hit, "prime0");
  const Tick slow = latency_of(miss, "prime0");
  EXPECT_EQ(fast, 2u);
  EXPECT_GE(slow - fast, 18u);
}

TEST(Attack, PrimeProbeTracesIdenticalUnderMuonTrap) {
  const Scenario& s = find_scenario("spectre_prime_probe");
  EXPECT_EQ(run_scenario(s, 0, Profile::MuonTrap), run_scenario(s, 1, Profile::MuonTrap));
}

TEST(Attack, TlbAttackSealedAcrossFilterTlbSizes) {
  const Scenario& s = find_scenario("tlb_prime_probe");
  for (unsigned n : {4u, 8u, 16u}) {
    ScenarioOptions o;
    o.filter_tlb_entries = n;
    EXPECT_TRUE(leak_oracle(s, Profile::Unprotected, o).leaks) << n;
    EXPECT_FALSE(leak_oracle(s, Profile::MuonTrap, o).leaks) << n;
    EXPECT_FALSE(leak_oracle(s, Profile::MuonTrapClear, o).leaks) << n;
    EXPECT_EQ(scenario_config(s, Profile::MuonTrap, o).tlb.filter_entries, n);
  }
}

TEST(Attack, UnusedSecretGivesIdenticalTraces) {
  Scenario s;
  s.name = "noop";
  s.configure = [](RunConfig&, Profile) {};
  s.script = [](Rig& r, int) {
    const ThreadId t{0, 0};
    r.speculate(t, [&] { r.spec_issue(t, MemKind::Load, 0x123440); });
    r.probe("a", t, MemKind::Load, 0x123440);
    r.probe("b", t, MemKind::Load, 0x223440);
  };
  for (Profile p : kProfiles) {
    const LeakVerdict v = leak_oracle(s, p);
    EXPECT_FALSE(v.leaks);
    EXPECT_FALSE(v.witness.has_value());
  }
}

TEST(Attack, BrokenScriptRaisesScriptError) {
  Scenario s;
  s.name = "broken";
  s.configure = [](RunConfig&, Profile) {};
  s.script = [](Rig& r, int) {
    r.spec_issue({0, 0}, MemKind::Load, 0x1000);
    r.machine().domain_switch({0, 0}, {1, 0}, SwitchCause::ContextSwitch);
  };
  try {
    run_scenario(s, 0, Profile::MuonTrap);
    FAIL() << "expected ScriptError";
  } catch (const SimError& e) {
    EXPECT_EQ(e.code(), ErrorCode::ScriptError);
    EXPECT_NE(std::string(e.what()).find("broken"), std::string::npos);
  }
}

TEST(Attack, ScenarioConfigAppliesProfile) {
  const Scenario& s = find_scenario("meltdown_style");
  EXPECT_FALSE(scenario_config(s, Profile::Unprotected, {}).flags.check_permissions_before_fill);
  EXPECT_TRUE(scenario_config(s, Profile::MuonTrap, {}).flags.check_permissions_before_fill);
  EXPECT_EQ(scenario_config(s, Profile::MuonTrapClear, {}).flags.defense, Profile::MuonTrapClear);
}

TEST(Attack, MatrixJsonShape) {
  const auto cells = attack_matrix({"prefetcher"}, kProfiles, {});
  const auto j = nlohmann::json::parse(matrix_json(cells, {}));
  EXPECT_TRUE(j["all_match"].get<bool>());
  EXPECT_EQ(j["scenarios"]["prefetcher"]["unprotected"]["verdict"], "leaks");
  EXPECT_EQ(j["scenarios"]["prefetcher"]["muontrap"]["verdict"], "sealed");
  EXPECT_FALSE(j["scenarios"]["prefetcher"]["unprotected"]["secret0"].empty());
}
