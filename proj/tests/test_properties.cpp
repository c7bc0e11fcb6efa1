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

#include "checks.hpp"

using namespace mtsim;
using namespace mtsim::checks;

TEST(Properties, PurityPoolRespectsFilterWays) {
  RunConfig cfg;
  std::mt19937_64 rng(5);
  const auto pool = purity_pool(rng, cfg, 0x4000'0000, 2);
  std::map<LineNum, unsigned> per_set;
  for (Addr a : pool) ++per_set[line_of(a) % 8];
  for (const auto& [set, n] : per_set) EXPECT_LE(n, cfg.filter.ways);
  EXPECT_GE(pool.size(), 8u);
}

TEST(Properties, SquashedAccessesLeaveNonSpeculativeStateUntouched) {
  for (Profile p : {Profile::MuonTrap, Profile::MuonTrapClear}) {
    RunConfig cfg;
    cfg.cores = 3;
    cfg.flags.defense = p;
    EXPECT_EQ(purity_failures(cfg, 200), std::vector<std::uint64_t>{}) << to_string(p);
  }
}

TEST(Properties, PurityCheckCatchesUnprotectedLeaks) {
  RunConfig cfg;
  cfg.cores = 3;
  cfg.flags.defense = Profile::Unprotected;
  EXPECT_GT(purity_failures(cfg, 50).size(), 25u);
}

TEST(Properties, CommittedLoadsMatchSequentialMemory) {
  for (Profile p : {Profile::MuonTrap, Profile::Unprotected, Profile::MuonTrapClear}) {
    RunConfig cfg;
    cfg.cores = 3;
    cfg.threads_per_core = 2;
    cfg.flags.defense = p;
    for (std::uint64_t seed : {99u, 7u}) {
      const OracleRun r = coherence_run(cfg, 10'000, seed);
      EXPECT_TRUE(r.errors.empty()) << to_string(p) << ": " << (r.errors.empty() ? "" : r.errors.front());
      EXPECT_GT(r.checked, 1000u);
    }
  }
}

TEST(Properties, OracleFlagsWrongValues) {
  Oracle o;
  o.on_store_commit({0, 0}, 1, 5, 9);
  o.on_load_bind({1, 0}, 1, 5, 9, false);
  o.on_load_bind({1, 0}, 2, 5, 3, true);
  EXPECT_TRUE(o.errors.empty());
  o.on_load_bind({1, 0}, 3, 5, 8, false);
  EXPECT_EQ(o.errors.size(), 1u);
}

TEST(Properties, ExhaustiveTwoCoreInterleavings) {
  const ExploreResult r = explore_all();
  EXPECT_EQ(r.failures, 0u) << r.first_failure;
  EXPECT_EQ(r.leaves, 64u * 5 * 5 * 924);
}
