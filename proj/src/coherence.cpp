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

#include "mtsim/coherence.hpp"

#include <algorithm>
#include <cstdio>

#include "mtsim/tlb.hpp"

namespace mtsim {

std::string_view to_string(MsgKind k) {
  switch (k) {
    case MsgKind::GetS: return "GetS";
    case MsgKind::GetX: return "GetX";
    case MsgKind::Upgrade: return "Upgrade";
    case MsgKind::SEUpgrade: return "SEUpgrade";
    case MsgKind::Nack: return "Nack";
    case MsgKind::Data: return "Data";
    case MsgKind::InvFilterBroadcast: return "InvFilterBroadcast";
    case MsgKind::WritebackThrough: return "WritebackThrough";
  }
  return "?";
}

std::string CoherenceMsg::format() const {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%llu %s line=0x%llx req=%s spec=%d inst=%llu",
                static_cast<unsigned long long>(tick), std::string(to_string(kind)).c_str(),
                static_cast<unsigned long long>(line), to_string(requester).c_str(), speculative ? 1 : 0,
                static_cast<unsigned long long>(inst));
  return buf;
}

Hierarchy::Hierarchy(const RunConfig& cfg)
    : cfg_(cfg),
      protected_(cfg.protected_mode()),
      l2_("l2", cfg.caches.l2, cfg.protected_mode()),
      prefetcher_(cfg.prefetch) {
  cfg_.validate();
  for (unsigned c = 0; c < cfg.cores; ++c) {
    l1d_.emplace_back("l1d", cfg.caches.l1d, protected_);
    l1i_.emplace_back("l1i", cfg.caches.l1i, protected_);
    for (unsigned t = 0; t < cfg.threads_per_core; ++t) {
      l0d_.emplace_back(cfg.filter, false, cfg.flags.block_uncommitted_eviction);
      l0i_.emplace_back(cfg.filter, true, cfg.flags.block_uncommitted_eviction);
    }
  }
}

Tick Hierarchy::path_latency(Level level, bool instruction) const {
  const Tick l0 = cfg_.filter.hit_latency;
  const Tick l1 = instruction ? cfg_.caches.l1i.hit_latency : cfg_.caches.l1d.hit_latency;
  if (level == Level::L0) return l0;
  Tick t = l1;
  if (protected_) t = cfg_.flags.parallel_l0_l1 ? std::max(l0, l1) : l0 + l1;
  if (level == Level::L1) return t;
  t += cfg_.caches.l2.hit_latency;
  if (level == Level::L2) return t;
  return t + cfg_.caches.memory_latency;
}

void Hierarchy::record(Tick now, MsgKind k, LineNum line, ThreadId req, bool spec, InstId inst) {
  if (logging_) log_.push_back({now, k, line, req, spec, inst});
}

bool Hierarchy::other_l1_holds(unsigned core, LineNum pline) const {
  for (unsigned c = 0; c < cfg_.cores; ++c) {
    if (c != core && (l1d_[c].contains(pline) || l1i_[c].contains(pline))) return true;
  }
  return false;
}

bool Hierarchy::any_l1_holds(LineNum pline) const {
  for (unsigned c = 0; c < cfg_.cores; ++c) {
    if (l1d_[c].contains(pline) || l1i_[c].contains(pline)) return true;
  }
  return false;
}

int Hierarchy::remote_owner(unsigned core, LineNum pline) const {
  for (unsigned c = 0; c < cfg_.cores; ++c) {
    if (c == core) continue;
    const Mesi s = l1d_[c].state_of(pline);
    if (s == Mesi::E || s == Mesi::M) return static_cast<int>(c);
  }
  return -1;
}

void Hierarchy::fill_l1(unsigned core, bool instruction, LineNum pline, Mesi st, std::uint64_t data, bool dirty,
                        FillSource src) {
  NsCache& l1 = instruction ? l1i_[core] : l1d_[core];
  auto evicted = l1.fill(pline, st, data, dirty, src);
  if (evicted && evicted->state == Mesi::M) {
    ++bus_.writebacks;
    fill_l2(evicted->tag, evicted->data, true, FillSource::Coherence);
  }
}

void Hierarchy::fill_l2(LineNum pline, std::uint64_t data, bool dirty, FillSource src) {
  if (NsLine* l = l2_.find(pline); l != nullptr && l->dirty && !dirty) dirty = true;
  auto evicted = l2_.fill(pline, Mesi::S, data, dirty, src);
  if (evicted && evicted->dirty) {
    ++bus_.writebacks;
    memory_[evicted->tag] = evicted->data;
  }
}

void Hierarchy::downgrade(unsigned owner, LineNum pline, Tick now, ThreadId req, InstId inst) {
  NsLine* l = l1d_[owner].find(pline);
  if (l->state == Mesi::M) {
    ++bus_.writebacks;
    record(now, MsgKind::WritebackThrough, pline, req, false, inst);
    const std::uint64_t data = l->data;
    l->state = Mesi::S;
    l->dirty = false;
    fill_l2(pline, data, true, FillSource::Coherence);
  } else {
    l->state = Mesi::S;
  }
  ++bus_.downgrades;
}

Grant Hierarchy::gets(ThreadId req, LineNum pline, bool speculative, bool instruction, Tick now, InstId inst) {
  const unsigned c = req.core;
  const bool quiet = protected_ && speculative;  // no recency or state change
  const bool pt = PageTables::is_page_table_line(pline);
  NsCache& own = instruction ? l1i_[c] : l1d_[c];
  Grant g;

  if (own.lookup(pline, !quiet).hit) {
    g.origin = Level::L1;
    g.data = value_of(pline);
    g.latency = path_latency(Level::L1, instruction);
    g.level_latency = own.hit_latency();
    return g;
  }

  ++bus_.transactions;
  ++bus_.gets;
  record(now, MsgKind::GetS, pline, req, speculative, inst);

  const int owner = remote_owner(c, pline);
  if (owner >= 0) {
    if (quiet && !pt) {
      ++bus_.nacks;
      record(now, MsgKind::Nack, pline, req, speculative, inst);
      g.nack = true;
      g.latency = path_latency(Level::L2, instruction);
      g.level_latency = cfg_.caches.l2.hit_latency;
      return g;
    }
    downgrade(static_cast<unsigned>(owner), pline, now, req, inst);
    g.origin = Level::L2;
  } else if (l2_.lookup(pline, !quiet).hit) {
    g.origin = Level::L2;
    NsLine* l = l2_.find(pline);
    if (l->prefetched) {
      ++prefetcher_.stats().useful;
      l->prefetched = false;
    }
  } else if (other_l1_holds(c, pline)) {
    g.origin = Level::L2;  // cache-to-cache, charged like an L2 hit
  } else {
    g.origin = Level::Memory;
  }

  g.data = value_of(pline);
  g.se_eligible = !pt && !instruction && !any_l1_holds(pline);
  g.latency = path_latency(g.origin, instruction);
  g.level_latency = g.origin == Level::L2 ? cfg_.caches.l2.hit_latency : cfg_.caches.memory_latency;
  record(now, MsgKind::Data, pline, req, speculative, inst);

  if (!protected_) {
    const Mesi st = instruction || pt || other_l1_holds(c, pline) ? Mesi::S : Mesi::E;
    const FillSource src = speculative ? FillSource::Speculative : FillSource::Coherence;
    if (g.origin == Level::Memory) fill_l2(pline, g.data, false, src);
    fill_l1(c, instruction, pline, st, g.data, false, src);
    if (!instruction && cfg_.prefetch.enabled) prefetcher_.notify({pline, g.origin, inst, req});
  }
  return g;
}

Tick Hierarchy::getx(ThreadId req, LineNum pline, std::uint64_t value, bool speculative, Tick now, InstId inst) {
  if (speculative && protected_) {
    throw SimError(ErrorCode::SpeculativeExclusiveForbidden,
                   "speculative exclusive request for line " + std::to_string(pline));
  }
  const unsigned c = req.core;
  NsCache& own = l1d_[c];
  const NsLookup hit = own.lookup(pline, true);
  Tick latency = own.hit_latency();
  if (hit.hit && (hit.state == Mesi::E || hit.state == Mesi::M)) {
    NsLine* l = own.find(pline);
    l->state = Mesi::M;
    l->dirty = true;
    l->data = value;
    // SMT siblings share the L1 but not the filter caches.
    for (unsigned t = 0; t < cfg_.threads_per_core; ++t) {
      if (t == req.thread) continue;
      bus_.filter_invalidations += l0d_[flat({c, t})].snoop_invalidate(pline);
      bus_.filter_invalidations += l0i_[flat({c, t})].snoop_invalidate(pline);
    }
  } else {
    ++bus_.transactions;
    ++bus_.getx;
    record(now, hit.hit ? MsgKind::Upgrade : MsgKind::GetX, pline, req, speculative, inst);
    for (unsigned o = 0; o < cfg_.cores; ++o) {
      if (o == c) continue;
      if (l1d_[o].invalidate(pline)) ++bus_.invalidations;
      if (l1i_[o].invalidate(pline)) ++bus_.invalidations;
    }
    ++bus_.filter_broadcasts;
    record(now, MsgKind::InvFilterBroadcast, pline, req, false, inst);
    bus_.filter_invalidations += broadcast_filter_invalidate(pline, -1, &req);
    fill_l1(c, false, pline, Mesi::M, value, true, FillSource::Commit);
    latency += cfg_.caches.l2.hit_latency;
  }
  l1i_[c].invalidate(pline);
  if (FilterLine* fl = l0d_[flat(req)].find_valid(pline)) {
    fl->data = value;
    fl->committed = true;
    fl->se_pending = false;
  }
  l0i_[flat(req)].snoop_invalidate(pline);
  return latency;
}

Grant Hierarchy::exclusive_prefetch(ThreadId req, LineNum pline, Tick now, InstId inst) {
  const unsigned c = req.core;
  NsCache& own = l1d_[c];
  const NsLookup hit = own.lookup(pline, true);
  Grant g;
  g.data = value_of(pline);
  if (hit.hit && (hit.state == Mesi::E || hit.state == Mesi::M)) {
    g.origin = Level::L1;
    g.latency = path_latency(Level::L1, false);
    g.level_latency = own.hit_latency();
    return g;
  }

  ++bus_.transactions;
  ++bus_.getx;
  record(now, hit.hit ? MsgKind::Upgrade : MsgKind::GetX, pline, req, true, inst);
  g.origin = Level::L2;
  bool dirty = false;
  if (!hit.hit) {
    const int owner = remote_owner(c, pline);
    if (owner >= 0) {
      dirty = l1d_[owner].state_of(pline) == Mesi::M;
    } else if (!l2_.lookup(pline, true).hit && !other_l1_holds(c, pline)) {
      g.origin = Level::Memory;
    }
  }
  for (unsigned o = 0; o < cfg_.cores; ++o) {
    if (o == c) continue;
    if (l1d_[o].invalidate(pline)) ++bus_.invalidations;
    if (l1i_[o].invalidate(pline)) ++bus_.invalidations;
  }
  if (g.origin == Level::Memory) fill_l2(pline, g.data, false, FillSource::Speculative);
  fill_l1(c, false, pline, dirty ? Mesi::M : Mesi::E, g.data, dirty, FillSource::Speculative);
  if (!hit.hit && cfg_.prefetch.enabled) prefetcher_.notify({pline, g.origin, inst, req});
  g.latency = path_latency(g.origin, false);
  g.level_latency = g.origin == Level::L2 ? cfg_.caches.l2.hit_latency : cfg_.caches.memory_latency;
  return g;
}

CommitLineResult Hierarchy::commit_line(ThreadId t, LineNum pline, bool instruction, Tick now, InstId inst) {
  CommitLineResult r;
  if (!protected_) return r;
  const unsigned c = t.core;
  FilterCache& l0 = instruction ? l0i_[flat(t)] : l0d_[flat(t)];
  NsCache& own = instruction ? l1i_[c] : l1d_[c];
  FilterLine* fl = l0.find_valid(pline);
  if (fl != nullptr && fl->committed) return r;

  r.traffic = true;
  const bool own_held = own.contains(pline);
  if (fl != nullptr) {
    fl->committed = true;
    fl->se_pending = false;
    ++bus_.transactions;
    ++bus_.write_throughs;
    record(now, MsgKind::WritebackThrough, pline, t, false, inst);
    if (const int owner = remote_owner(c, pline); owner >= 0) downgrade(static_cast<unsigned>(owner), pline, now, t, inst);
    const Mesi st = own.state_of(pline);
    if (st == Mesi::E || st == Mesi::M) {
      own.touch(pline);
    } else {
      fill_l1(c, instruction, pline, Mesi::S, fl->data, false, FillSource::Commit);
    }
  } else {
    ++bus_.commit_refetches;
    const Grant g = gets(t, pline, false, instruction, now, inst);
    if (g.origin != Level::L1) {
      if (g.origin == Level::Memory) fill_l2(pline, g.data, false, FillSource::Commit);
      fill_l1(c, instruction, pline, Mesi::S, g.data, false, FillSource::Commit);
    }
  }

  if (!instruction && !own_held && cfg_.prefetch.enabled) prefetcher_.notify({pline, Level::L2, inst, t});
  if (!instruction && !PageTables::is_page_table_line(pline) && own.state_of(pline) == Mesi::S &&
      !other_l1_holds(c, pline)) {
    r.launch_se = true;
    ++bus_.se_launched;
  }
  return r;
}

bool Hierarchy::se_upgrade(unsigned core, LineNum pline, Tick now) {
  NsLine* l = l1d_[core].find(pline);
  if (l == nullptr || l->state != Mesi::S || other_l1_holds(core, pline)) {
    ++bus_.se_aborted;
    return false;
  }
  l->state = Mesi::E;
  ++bus_.se_upgrades;
  ++bus_.transactions;
  const ThreadId who{core, 0};
  record(now, MsgKind::SEUpgrade, pline, who, false, 0);
  ++bus_.filter_broadcasts;
  record(now, MsgKind::InvFilterBroadcast, pline, who, false, 0);
  bus_.filter_invalidations += broadcast_filter_invalidate(pline, static_cast<int>(core), nullptr);
  return true;
}

bool Hierarchy::prefetch_one(Tick now) {
  auto target = prefetcher_.pop();
  if (!target) return false;
  PrefetchStats& ps = prefetcher_.stats();
  if (remote_owner(cfg_.cores, *target) >= 0) {
    ++ps.suppressed;
  } else if (l2_.contains(*target)) {
    ++ps.redundant;
  } else {
    ++ps.issued;
    ++bus_.transactions;
    prefetch_issues_.push_back(*target);
    record(now, MsgKind::GetS, *target, ThreadId{}, false, 0);
    fill_l2(*target, value_of(*target), false, FillSource::Prefetch);
  }
  return true;
}

std::uint64_t Hierarchy::value_of(LineNum pline) const {
  for (const NsCache& l1 : l1d_) {
    if (const NsLine* l = l1.find(pline); l != nullptr && l->state == Mesi::M) return l->data;
  }
  if (const NsLine* l = l2_.find(pline)) return l->data;
  for (const NsCache& l1 : l1d_) {
    if (const NsLine* l = l1.find(pline)) return l->data;
  }
  for (const NsCache& l1 : l1i_) {
    if (const NsLine* l = l1.find(pline)) return l->data;
  }
  auto it = memory_.find(pline);
  return it == memory_.end() ? 0 : it->second;
}

void Hierarchy::poke(LineNum pline, std::uint64_t value) {
  memory_[pline] = value;
  auto patch = [&](NsCache& c) {
    if (NsLine* l = c.find(pline)) l->data = value;
  };
  for (NsCache& c : l1d_) patch(c);
  for (NsCache& c : l1i_) patch(c);
  patch(l2_);
  for (FilterCache& f : l0d_) {
    if (FilterLine* l = f.find_valid(pline)) l->data = value;
  }
  for (FilterCache& f : l0i_) {
    if (FilterLine* l = f.find_valid(pline)) l->data = value;
  }
}

void Hierarchy::mirror_fill(unsigned core, bool instruction, LineNum pline, std::uint64_t data) {
  if (remote_owner(core, pline) >= 0) return;
  NsCache& l1 = instruction ? l1i_[core] : l1d_[core];
  if (l1.contains(pline)) {
    l1.touch(pline);
  } else {
    fill_l1(core, instruction, pline, Mesi::S, data, false, FillSource::Coherence);
  }
  fill_l2(pline, data, false, FillSource::Coherence);
}

std::size_t Hierarchy::broadcast_filter_invalidate(LineNum pline, int skip_core, const ThreadId* skip_thread) {
  std::size_t n = 0;
  for (unsigned c = 0; c < cfg_.cores; ++c) {
    if (static_cast<int>(c) == skip_core) continue;
    for (unsigned t = 0; t < cfg_.threads_per_core; ++t) {
      const ThreadId id{c, t};
      if (skip_thread != nullptr && *skip_thread == id) continue;
      n += l0d_[flat(id)].snoop_invalidate(pline);
      n += l0i_[flat(id)].snoop_invalidate(pline);
    }
  }
  return n;
}

std::uint64_t Hierarchy::check_line(LineNum pline) const {
  std::uint64_t checks = 0;
  int owners = 0;
  int holders = 0;
  for (const NsCache& l1 : l1d_) {
    const Mesi s = l1.state_of(pline);
    if (s != Mesi::I) ++holders;
    if (s == Mesi::E || s == Mesi::M) ++owners;
  }
  ++checks;
  if (owners > 1 || (owners == 1 && holders > 1)) {
    throw SimError(ErrorCode::InvariantViolation,
                   "single-writer violated for line " + std::to_string(pline));
  }
  if (!protected_) return checks;
  for (unsigned c = 0; c < cfg_.cores; ++c) {
    for (unsigned t = 0; t < cfg_.threads_per_core; ++t) {
      const std::size_t i = flat({c, t});
      for (const FilterCache* f : {&l0d_[i], &l0i_[i]}) {
        const FilterLine* l = f->find_valid(pline);
        ++checks;
        if (l == nullptr) continue;
        if (l->se_pending && l->committed) {
          throw SimError(ErrorCode::InvariantViolation, "SE-pending committed filter line");
        }
        if (remote_owner(c, pline) >= 0) {
          throw SimError(ErrorCode::InvariantViolation,
                         "filter copy of line " + std::to_string(pline) + " while a remote L1 owns it");
        }
        if (l->data != value_of(pline)) {
          throw SimError(ErrorCode::InvariantViolation, "stale filter copy of line " + std::to_string(pline));
        }
      }
    }
  }
  return checks;
}

std::uint64_t Hierarchy::audit() const {
  std::uint64_t checks = 0;
  for (const FilterCache& f : l0d_) {
    f.check_invariants();
    ++checks;
  }
  for (const FilterCache& f : l0i_) {
    f.check_invariants();
    ++checks;
  }
  std::vector<LineNum> lines;
  for (const NsCache& l1 : l1d_) {
    for (const NsLine& l : l1.valid_lines()) lines.push_back(l.tag);
  }
  for (const FilterCache& f : l0d_) {
    for (std::size_t i = 0; i < f.capacity(); ++i) {
      if (f.valid(i)) lines.push_back(f.slot(i).ptag);
    }
  }
  for (LineNum l : lines) checks += check_line(l);
  return checks;
}

}  // namespace mtsim
