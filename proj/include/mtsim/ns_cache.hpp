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
#include <optional>
#include <string>
#include <vector>

#include "mtsim/common.hpp"
#include "mtsim/config.hpp"
#include "mtsim/stats.hpp"

namespace mtsim {

// A line in a non-speculative cache (L1I, L1D or L2).
struct NsLine {
  LineNum tag = 0;  // physical line
  Mesi state = Mesi::I;
  bool dirty = false;  // newer than the next level
  std::uint64_t data = 0;
  std::uint64_t lru = 0;  // larger is more recent
  bool prefetched = false;  // filled by the prefetcher and not yet demanded
};

// Who is asking for a fill. Speculative fills exist only in the
// unprotected baseline; a cache with its firewall up rejects them.
enum class FillSource : std::uint8_t { Commit, Coherence, Prefetch, Speculative };

// What a comparison of non-speculative state looks at: tags, states, data and
// the per-set recency order. Raw LRU stamps are excluded.
struct NsSnapshot {
  struct Entry {
    LineNum tag;
    Mesi state;
    bool dirty;
    std::uint64_t data;
    bool operator==(const Entry&) const = default;
  };
  std::vector<std::vector<Entry>> sets;  // each set ordered LRU -> MRU

  bool operator==(const NsSnapshot&) const = default;
};

struct NsLookup {
  bool hit = false;
  Mesi state = Mesi::I;
  Tick latency = 0;
};

// Set-associative LRU cache with MESI line states.
class NsCache {
 public:
  NsCache(std::string name, CacheGeometry geometry, bool speculation_firewall);

  const std::string& name() const { return name_; }
  const CacheGeometry& geometry() const { return geometry_; }
  Tick hit_latency() const { return geometry_.hit_latency; }
  std::uint64_t set_index(LineNum l) const { return l & (sets_ - 1); }

  // Counted lookup. touch=false leaves recency alone, which is what
  // speculative probes of a protected hierarchy use.
  NsLookup lookup(LineNum line, bool touch);

  NsLine* find(LineNum line);
  const NsLine* find(LineNum line) const;
  bool contains(LineNum line) const { return find(line) != nullptr; }
  Mesi state_of(LineNum line) const;

  // Installs or updates a line and makes it MRU. Returns the evicted line,
  // if a valid one had to go.
  std::optional<NsLine> fill(LineNum line, Mesi state, std::uint64_t data, bool dirty,
                             FillSource source);

  void touch(LineNum line);
  bool invalidate(LineNum line);

  std::vector<NsLine> valid_lines() const;
  NsSnapshot snapshot() const;

  LevelStats& stats() { return stats_; }
  const LevelStats& stats() const { return stats_; }

 private:
  std::string name_;
  CacheGeometry geometry_;
  std::uint64_t sets_;
  bool firewall_;
  std::vector<NsLine> lines_;  // sets_ * ways, set-major
  std::uint64_t clock_ = 0;
  LevelStats stats_;
};

}  // namespace mtsim
