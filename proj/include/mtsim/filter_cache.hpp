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
#include <vector>

#include "mtsim/common.hpp"
#include "mtsim/config.hpp"
#include "mtsim/stats.hpp"

namespace mtsim {

// One line of a speculative filter cache. Validity lives in a separate
// register vector inside FilterCache, not here.
struct FilterLine {
  LineNum vtag = 0;
  LineNum ptag = 0;
  bool committed = false;
  bool se_pending = false;  // would have been E in an unprotected L1
  Level origin = Level::Memory;  // non-speculative level the data came from
  std::uint64_t data = 0;
  std::uint64_t lru = 0;
};

struct FilterFill {
  bool installed = false;  // false only when eviction of uncommitted data is blocked
  std::optional<FilterLine> evicted;
};

// L0 filter cache, instantiated per thread for data and for instructions.
//
// Lines are only ever functionally Shared or Invalid. The array is indexed by
// the page-offset bits that virtual and physical line numbers have in common,
// so the CPU side looks up by virtual tag and the memory side by physical
// tag without a translation. A fill overwrites any valid line with the same
// physical tag, so each physical line has at most one copy.
class FilterCache {
 public:
  FilterCache(const FilterConfig& cfg, bool instruction, bool block_uncommitted_eviction);

  bool is_instruction() const { return instruction_; }
  Tick hit_latency() const { return cfg_.hit_latency; }
  std::size_t capacity() const { return lines_.size(); }
  std::uint64_t sets() const { return sets_; }
  unsigned ways() const { return cfg_.ways; }

  // CPU side. Counted; a hit makes the line MRU.
  const FilterLine* lookup_cpu(LineAddr addr);
  bool probe_cpu(LineAddr addr) const;

  // Memory side, by physical line.
  bool snoop(LineNum pline) const;
  bool snoop_invalidate(LineNum pline);
  FilterLine* find_valid(LineNum pline);
  const FilterLine* find_valid(LineNum pline) const;

  // Installs a line. speculative fills start uncommitted; se_pending is kept
  // only on uncommitted data lines. With blocking enabled and every way of
  // the set holding uncommitted data, nothing is installed unless
  // may_evict_uncommitted is set.
  FilterFill fill(LineAddr addr, std::uint64_t data, Level origin, bool speculative, bool se_pending,
                  bool may_evict_uncommitted = false);

  // Clears every valid bit at once. Costs one cycle whatever the occupancy.
  Tick flush();

  std::size_t occupancy() const;
  bool valid(std::size_t way_slot) const { return valid_[way_slot]; }
  const FilterLine& slot(std::size_t way_slot) const { return lines_[way_slot]; }
  Mesi functional_state(std::size_t way_slot) const { return valid_[way_slot] ? Mesi::S : Mesi::I; }

  // Throws InvariantViolation on a broken structural invariant.
  void check_invariants() const;

  FilterStats& stats() { return stats_; }
  const FilterStats& stats() const { return stats_; }

 private:
  std::uint64_t set_index(LineNum l) const { return l & (sets_ - 1); }
  std::optional<std::size_t> find_slot_ptag(LineNum pline) const;

  FilterConfig cfg_;
  bool instruction_;
  bool block_;
  std::uint64_t sets_;
  std::vector<FilterLine> lines_;
  std::vector<bool> valid_;
  std::uint64_t clock_ = 0;
  FilterStats stats_;
};

}  // namespace mtsim
