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

#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace mtsim {

struct LevelStats {
  std::uint64_t lookups = 0;
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;
  std::uint64_t fills = 0;
  std::uint64_t evictions = 0;

  double hit_rate() const { return lookups == 0 ? 0.0 : double(hits) / double(lookups); }
  LevelStats& operator+=(const LevelStats& o);
};

struct FilterStats : LevelStats {
  std::uint64_t uncommitted_drops = 0;  // uncommitted lines evicted before commit
  std::uint64_t flushes = 0;
  std::uint64_t snoop_invalidations = 0;
  std::uint64_t blocked_fills = 0;

  FilterStats& operator+=(const FilterStats& o);
};

// Counters owned by the coherence bus and the commit machinery.
struct BusStats {
  std::uint64_t transactions = 0;   // every request that leaves a core's L1
  std::uint64_t gets = 0;
  std::uint64_t getx = 0;
  std::uint64_t nacks = 0;
  std::uint64_t downgrades = 0;     // remote M/E moved to S
  std::uint64_t invalidations = 0;  // non-speculative copies invalidated
  std::uint64_t filter_broadcasts = 0;
  std::uint64_t filter_invalidations = 0;  // filter-cache copies hit by broadcasts
  std::uint64_t se_launched = 0;
  std::uint64_t se_upgrades = 0;
  std::uint64_t se_aborted = 0;
  std::uint64_t writebacks = 0;
  std::uint64_t write_throughs = 0;
  std::uint64_t commit_refetches = 0;
};

struct PrefetchStats {
  std::uint64_t notifications = 0;
  std::uint64_t dropped_l1 = 0;     // notifications for L1-origin lines
  std::uint64_t issued = 0;
  std::uint64_t useful = 0;
  std::uint64_t suppressed = 0;     // would have forced a downgrade
  std::uint64_t redundant = 0;      // already resident or already queued
  std::uint64_t queue_overflow = 0;
};

struct TlbStats {
  std::uint64_t filter_hits = 0;
  std::uint64_t main_hits = 0;
  std::uint64_t walks = 0;
  std::uint64_t retranslations = 0;
  std::uint64_t promotions = 0;
  std::uint64_t faults = 0;
};

struct ThreadStats {
  std::uint64_t issued = 0;
  std::uint64_t committed = 0;
  std::uint64_t squashed = 0;
  std::uint64_t forwarded = 0;
  std::uint64_t nacked = 0;
  std::uint64_t blocked = 0;
  std::uint64_t domain_switches = 0;
  FilterStats l0d;
  FilterStats l0i;
};

struct StatsSnapshot {
  std::uint64_t ticks = 0;
  LevelStats l1d;
  LevelStats l1i;
  LevelStats l2;
  FilterStats l0d;  // summed over threads
  FilterStats l0i;
  BusStats bus;
  PrefetchStats prefetch;
  TlbStats tlb;
  std::map<std::string, ThreadStats> threads;  // keyed "core.thread"
  std::uint64_t invariant_checks = 0;
};

}  // namespace mtsim
