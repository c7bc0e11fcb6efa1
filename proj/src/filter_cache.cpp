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

#include "mtsim/filter_cache.hpp"

#include <algorithm>
#include <set>

namespace mtsim {

FilterCache::FilterCache(const FilterConfig& cfg, bool instruction, bool block_uncommitted_eviction)
    : cfg_(cfg),
      instruction_(instruction),
      block_(block_uncommitted_eviction),
      sets_(cfg.geometry().sets()),
      lines_(cfg.geometry().lines()),
      valid_(cfg.geometry().lines(), false) {
  cfg_.validate();
}

const FilterLine* FilterCache::lookup_cpu(LineAddr addr) {
  ++stats_.lookups;
  const auto base = set_index(addr.vline) * cfg_.ways;
  for (unsigned w = 0; w < cfg_.ways; ++w) {
    const auto i = base + w;
    if (valid_[i] && lines_[i].vtag == addr.vline) {
      ++stats_.hits;
      lines_[i].lru = ++clock_;
      return &lines_[i];
    }
  }
  ++stats_.misses;
  return nullptr;
}

bool FilterCache::probe_cpu(LineAddr addr) const {
  const auto base = set_index(addr.vline) * cfg_.ways;
  for (unsigned w = 0; w < cfg_.ways; ++w) {
    if (valid_[base + w] && lines_[base + w].vtag == addr.vline) return true;
  }
  return false;
}

std::optional<std::size_t> FilterCache::find_slot_ptag(LineNum pline) const {
  const auto base = set_index(pline) * cfg_.ways;
  for (unsigned w = 0; w < cfg_.ways; ++w) {
    if (valid_[base + w] && lines_[base + w].ptag == pline) return base + w;
  }
  return std::nullopt;
}

bool FilterCache::snoop(LineNum pline) const { return find_slot_ptag(pline).has_value(); }

bool FilterCache::snoop_invalidate(LineNum pline) {
  auto slot = find_slot_ptag(pline);
  if (!slot) return false;
  valid_[*slot] = false;
  ++stats_.snoop_invalidations;
  return true;
}

FilterLine* FilterCache::find_valid(LineNum pline) {
  auto slot = find_slot_ptag(pline);
  return slot ? &lines_[*slot] : nullptr;
}

const FilterLine* FilterCache::find_valid(LineNum pline) const {
  auto slot = find_slot_ptag(pline);
  return slot ? &lines_[*slot] : nullptr;
}

FilterFill FilterCache::fill(LineAddr addr, std::uint64_t data, Level origin, bool speculative,
                             bool se_pending, bool may_evict_uncommitted) {
  FilterFill result;
  const bool se = se_pending && speculative && !instruction_;

  // Alias: same physical line under another virtual tag.
  if (auto slot = find_slot_ptag(addr.pline)) {
    FilterLine& l = lines_[*slot];
    const bool committed = l.committed || !speculative;
    l = FilterLine{addr.vline, addr.pline, committed, se && !committed, origin, data, ++clock_};
    result.installed = true;
    return result;
  }

  const auto base = set_index(addr.vline) * cfg_.ways;
  std::optional<std::size_t> victim;
  for (unsigned w = 0; w < cfg_.ways && !victim; ++w) {
    if (!valid_[base + w]) victim = base + w;
  }
  if (!victim) {
    const bool committed_only = block_ && !may_evict_uncommitted;
    for (unsigned w = 0; w < cfg_.ways; ++w) {
      const auto i = base + w;
      if (committed_only && !lines_[i].committed) continue;
      if (!victim || lines_[i].lru < lines_[*victim].lru) victim = i;
    }
    if (!victim) {
      ++stats_.blocked_fills;
      return result;
    }
    result.evicted = lines_[*victim];
    ++stats_.evictions;
    if (!lines_[*victim].committed) ++stats_.uncommitted_drops;
  }
  ++stats_.fills;
  lines_[*victim] = FilterLine{addr.vline, addr.pline, !speculative, se, origin, data, ++clock_};
  valid_[*victim] = true;
  result.installed = true;
  return result;
}

Tick FilterCache::flush() {
  std::fill(valid_.begin(), valid_.end(), false);
  ++stats_.flushes;
  return 1;
}

std::size_t FilterCache::occupancy() const {
  return static_cast<std::size_t>(std::count(valid_.begin(), valid_.end(), true));
}

void FilterCache::check_invariants() const {
  std::set<LineNum> ptags;
  for (std::size_t i = 0; i < lines_.size(); ++i) {
    if (!valid_[i]) continue;
    const FilterLine& l = lines_[i];
    if (functional_state(i) != Mesi::S) {
      throw SimError(ErrorCode::InvariantViolation, "filter line in a state other than S/I");
    }
    if (l.se_pending && l.committed) {
      throw SimError(ErrorCode::InvariantViolation, "SE-pending line is already committed");
    }
    if (instruction_ && l.se_pending) {
      throw SimError(ErrorCode::InvariantViolation, "instruction filter line marked SE");
    }
    if (set_index(l.vtag) != set_index(l.ptag) || set_index(l.ptag) != i / cfg_.ways) {
      throw SimError(ErrorCode::InvariantViolation, "filter line stored in the wrong set");
    }
    if (!ptags.insert(l.ptag).second) {
      throw SimError(ErrorCode::InvariantViolation,
                     "two valid filter lines for physical line " + std::to_string(l.ptag));
    }
  }
}

}  // namespace mtsim
