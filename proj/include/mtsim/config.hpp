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
#include <string>
#include <string_view>
#include <vector>

#include "mtsim/common.hpp"

namespace mtsim {

struct CacheGeometry {
  std::uint64_t size_bytes = 0;
  unsigned ways = 1;
  Tick hit_latency = 1;
  unsigned mshrs = 4;

  std::uint64_t lines() const { return size_bytes / kLineSize; }
  std::uint64_t sets() const { return lines() / ways; }
  void validate(std::string_view name) const;

  bool operator==(const CacheGeometry&) const = default;
};

// Non-speculative caches. Defaults follow the simulated 4-core system:
// 32KiB/2-way/1-cycle L1I, 64KiB/2-way/2-cycle L1D, 2MiB/8-way/20-cycle L2.
struct CacheConfig {
  CacheGeometry l1i{32 * 1024, 2, 1, 4};
  CacheGeometry l1d{64 * 1024, 2, 2, 4};
  CacheGeometry l2{2 * 1024 * 1024, 8, 20, 16};
  Tick memory_latency = 80;

  bool operator==(const CacheConfig&) const = default;
};

// One filter cache per thread for data and one for instructions: 2KiB,
// 4-way, 1-cycle.
struct FilterConfig {
  std::uint64_t size_bytes = 2048;
  unsigned ways = 4;
  Tick hit_latency = 1;
  unsigned mshrs = 4;

  CacheGeometry geometry() const { return {size_bytes, ways, hit_latency, mshrs}; }
  void validate() const;

  bool operator==(const FilterConfig&) const = default;
};

struct TlbConfig {
  unsigned main_entries = 64;   // per core, split I/D, fully associative
  unsigned filter_entries = 8;  // per thread, fully associative

  bool operator==(const TlbConfig&) const = default;
};

struct CoreConfig {
  unsigned rob_entries = 192;
  unsigned lq_entries = 32;
  unsigned sq_entries = 32;

  bool operator==(const CoreConfig&) const = default;
};

struct PrefetchConfig {
  bool enabled = true;
  unsigned table_entries = 16;
  unsigned queue_depth = 8;

  bool operator==(const PrefetchConfig&) const = default;
};

struct Flags {
  Profile defense = Profile::MuonTrap;
  bool parallel_l0_l1 = false;
  bool clear_on_misspeculate = false;
  bool block_uncommitted_eviction = false;
  // Permission checks before any cache fill. Only the Meltdown-style
  // demonstration turns this off.
  bool check_permissions_before_fill = true;

  bool operator==(const Flags&) const = default;
};

struct RunConfig {
  unsigned cores = 4;
  unsigned threads_per_core = 1;
  CoreConfig core;
  CacheConfig caches;
  FilterConfig filter;
  TlbConfig tlb;
  PrefetchConfig prefetch;
  Flags flags;
  std::uint64_t seed = 1;
  bool check_invariants = true;

  bool protected_mode() const { return flags.defense != Profile::Unprotected; }
  bool clear_on_squash() const {
    return flags.defense == Profile::MuonTrapClear ||
           (protected_mode() && flags.clear_on_misspeculate);
  }

  void validate() const;

  // Key/value surface used by config files and --set overrides.
  static const std::vector<std::string>& keys();
  void set(std::string_view key, std::string_view value);
  std::string get(std::string_view key) const;

  // "key = value" lines, one per key, in keys() order.
  std::string serialize() const;
  // Applies "key = value" lines on top of the defaults. '#' starts a comment.
  static RunConfig parse(std::string_view text);
  void apply_text(std::string_view text);

  bool operator==(const RunConfig&) const = default;
};

// Applies a "key=value" override.
void apply_override(RunConfig& cfg, std::string_view assignment);

}  // namespace mtsim
