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

#include "mtsim/ns_cache.hpp"

#include <algorithm>

namespace mtsim {

LevelStats& LevelStats::operator+=(const LevelStats& o) {
  lookups += o.lookups;
  hits += o.hits;
  misses += o.misses;
  fills += o.fills;
  evictions += o.evictions;
  return *this;
}

FilterStats& FilterStats::operator+=(const FilterStats& o) {
  LevelStats::operator+=(o);
  uncommitted_drops += o.uncommitted_drops;
  flushes += o.flushes;
  snoop_invalidations += o.snoop_invalidations;
  blocked_fills += o.blocked_fills;
  return *this;
}

NsCache::NsCache(std::string name, CacheGeometry geometry, bool speculation_firewall)
    : name_(std::move(name)),
      geometry_(geometry),
      sets_(geometry.sets()),
      firewall_(speculation_firewall),
      lines_(geometry.lines()) {
  geometry_.validate(name_);
}

NsLookup NsCache::lookup(LineNum line, bool touch_line) {
  ++stats_.lookups;
  NsLine* l = find(line);
  if (l == nullptr) {
    ++stats_.misses;
    return {false, Mesi::I, geometry_.hit_latency};
  }
  ++stats_.hits;
  if (touch_line) l->lru = ++clock_;
  return {true, l->state, geometry_.hit_latency};
}

NsLine* NsCache::find(LineNum line) {
  return const_cast<NsLine*>(std::as_const(*this).find(line));
}

const NsLine* NsCache::find(LineNum line) const {
  const auto base = set_index(line) * geometry_.ways;
  for (unsigned w = 0; w < geometry_.ways; ++w) {
    const NsLine& l = lines_[base + w];
    if (l.state != Mesi::I && l.tag == line) return &l;
  }
  return nullptr;
}

Mesi NsCache::state_of(LineNum line) const {
  const NsLine* l = find(line);
  return l == nullptr ? Mesi::I : l->state;
}

std::optional<NsLine> NsCache::fill(LineNum line, Mesi state, std::uint64_t data, bool dirty,
                                    FillSource source) {
  if (firewall_ && source == FillSource::Speculative) {
    throw SimError(ErrorCode::SpeculativeFillForbidden,
                   name_ + " refused a speculative fill of line " + std::to_string(line));
  }
  if (NsLine* l = find(line)) {
    l->state = state;
    l->data = data;
    l->dirty = dirty;
    l->lru = ++clock_;
    if (source != FillSource::Prefetch) l->prefetched = false;
    return std::nullopt;
  }
  ++stats_.fills;
  const auto base = set_index(line) * geometry_.ways;
  NsLine* victim = nullptr;
  for (unsigned w = 0; w < geometry_.ways; ++w) {
    NsLine& l = lines_[base + w];
    if (l.state == Mesi::I) {
      victim = &l;
      break;
    }
    if (victim == nullptr || l.lru < victim->lru) victim = &l;
  }
  std::optional<NsLine> evicted;
  if (victim->state != Mesi::I) {
    ++stats_.evictions;
    evicted = *victim;
  }
  *victim = NsLine{line, state, dirty, data, ++clock_, source == FillSource::Prefetch};
  return evicted;
}

void NsCache::touch(LineNum line) {
  if (NsLine* l = find(line)) l->lru = ++clock_;
}

bool NsCache::invalidate(LineNum line) {
  NsLine* l = find(line);
  if (l == nullptr) return false;
  l->state = Mesi::I;
  l->dirty = false;
  l->prefetched = false;
  return true;
}

std::vector<NsLine> NsCache::valid_lines() const {
  std::vector<NsLine> out;
  for (const NsLine& l : lines_) {
    if (l.state != Mesi::I) out.push_back(l);
  }
  return out;
}

NsSnapshot NsCache::snapshot() const {
  NsSnapshot snap;
  snap.sets.resize(sets_);
  std::vector<const NsLine*> set;
  for (std::uint64_t s = 0; s < sets_; ++s) {
    set.clear();
    for (unsigned w = 0; w < geometry_.ways; ++w) {
      const NsLine& l = lines_[s * geometry_.ways + w];
      if (l.state != Mesi::I) set.push_back(&l);
    }
    std::sort(set.begin(), set.end(), [](const NsLine* a, const NsLine* b) { return a->lru < b->lru; });
    for (const NsLine* l : set) snap.sets[s].push_back({l->tag, l->state, l->dirty, l->data});
  }
  return snap;
}

}  // namespace mtsim
