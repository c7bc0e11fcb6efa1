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

#include "mtsim/machine.hpp"

#include <algorithm>

namespace mtsim {

std::string_view to_string(InstKind k) {
  switch (k) {
    case InstKind::Load: return "LOAD";
    case InstKind::Store: return "STORE";
    case InstKind::IFetch: return "IFETCH";
    case InstKind::Branch: return "BRANCH";
  }
  return "?";
}

namespace {

MemKind mem_kind(InstKind k) {
  switch (k) {
    case InstKind::Store: return MemKind::Store;
    case InstKind::IFetch: return MemKind::IFetch;
    default: return MemKind::Load;
  }
}

InstKind inst_kind(MemKind k) {
  switch (k) {
    case MemKind::Store: return InstKind::Store;
    case MemKind::IFetch: return InstKind::IFetch;
    default: return InstKind::Load;
  }
}

std::uint8_t required_perm(InstKind k) {
  switch (k) {
    case InstKind::Store: return kPermWrite;
    case InstKind::IFetch: return kPermExec;
    default: return kPermRead;
  }
}

}  // namespace

Tick MshrFile::acquire(Tick now, Tick service) {
  std::erase_if(busy_until_, [now](Tick t) { return t <= now; });
  Tick start = now;
  if (busy_until_.size() >= capacity_) {
    auto first = std::min_element(busy_until_.begin(), busy_until_.end());
    start = *first;
    busy_until_.erase(first);
  }
  busy_until_.push_back(start + service);
  return start;
}

std::size_t MshrFile::outstanding(Tick now) const {
  return static_cast<std::size_t>(std::count_if(busy_until_.begin(), busy_until_.end(),
                                                [now](Tick t) { return t > now; }));
}

Machine::Machine(const RunConfig& cfg) : cfg_(cfg), hier_(cfg) {
  for (unsigned c = 0; c < cfg.cores; ++c) {
    itlb_.emplace_back(cfg.tlb.main_entries);
    dtlb_.emplace_back(cfg.tlb.main_entries);
    l1_mshr_d_.emplace_back(cfg.caches.l1d.mshrs);
    l1_mshr_i_.emplace_back(cfg.caches.l1i.mshrs);
    for (unsigned t = 0; t < cfg.threads_per_core; ++t) threads_.emplace_back(ThreadId{c, t}, cfg);
  }
}

ThreadState& Machine::thread(ThreadId t) {
  if (t.core >= cfg_.cores || t.thread >= cfg_.threads_per_core) {
    throw SimError(ErrorCode::ScriptError, "no thread " + to_string(t));
  }
  return threads_[hier_.flat(t)];
}

const ThreadState& Machine::thread(ThreadId t) const {
  return const_cast<Machine*>(this)->thread(t);
}

InstRecord* Machine::record(ThreadState& ts, InstId id) {
  for (InstRecord& r : ts.rob) {
    if (r.id == id) return &r;
  }
  return nullptr;
}

const InstRecord* Machine::find(ThreadId t, InstId id) const {
  for (const InstRecord& r : thread(t).rob) {
    if (r.id == id) return &r;
  }
  return nullptr;
}

std::vector<ThreadId> Machine::threads() const {
  std::vector<ThreadId> out;
  for (const ThreadState& ts : threads_) out.push_back(ts.id);
  return out;
}

std::optional<AccessResult> Machine::result(ThreadId t, InstId id) const {
  const InstRecord* r = find(t, id);
  if (r == nullptr || !r->resolved) return std::nullopt;
  return AccessResult{r->id, r->latency(), r->ready_tick, r->value, r->level, r->fault};
}

std::optional<Addr> Machine::physical(DomainId d, Addr vaddr) const {
  auto m = page_tables_.resolve(d, page_of(vaddr));
  if (!m) return std::nullopt;
  return (m->ppage << kPageBits) | (vaddr & ((Addr{1} << kPageBits) - 1));
}

InstId Machine::issue(ThreadId t, const MemOp& op) {
  ThreadState& ts = thread(t);
  if (ts.rob.size() >= cfg_.core.rob_entries) throw SimError(ErrorCode::CapacityFull, "ROB full on " + to_string(t));
  if (op.kind == MemKind::Load && ts.loads >= cfg_.core.lq_entries) {
    throw SimError(ErrorCode::CapacityFull, "load queue full on " + to_string(t));
  }
  if (op.kind == MemKind::Store && ts.stores >= cfg_.core.sq_entries) {
    throw SimError(ErrorCode::CapacityFull, "store queue full on " + to_string(t));
  }
  const InstId id = op.inst_id != 0 ? op.inst_id : ts.last_id + 1;
  if (id <= ts.last_id) {
    throw SimError(ErrorCode::ScriptError, "instruction id " + std::to_string(id) + " is not newer than " +
                                               std::to_string(ts.last_id) + " on " + to_string(t));
  }
  ts.last_id = id;

  InstRecord r;
  r.id = id;
  r.kind = inst_kind(op.kind);
  r.vaddr = op.vaddr;
  r.store_value = op.value;
  r.issue_tick = now();
  ++ts.stats.issued;
  perform(ts, r, false);
  const std::optional<LineNum> line =
      r.translation ? std::optional<LineNum>(line_of(r.paddr)) : std::nullopt;
  if (r.kind == InstKind::Load) ++ts.loads;
  if (r.kind == InstKind::Store) ++ts.stores;
  ts.rob.push_back(std::move(r));
  on_new_head(ts);
  schedule_prefetch_drain();
  check(ts, line);
  return id;
}

InstId Machine::issue_branch(ThreadId t) {
  ThreadState& ts = thread(t);
  if (ts.rob.size() >= cfg_.core.rob_entries) throw SimError(ErrorCode::CapacityFull, "ROB full on " + to_string(t));
  InstRecord r;
  r.id = ++ts.last_id;
  r.kind = InstKind::Branch;
  r.issue_tick = r.ready_tick = now();
  r.resolved = true;
  ++ts.stats.issued;
  ts.rob.push_back(std::move(r));
  return ts.last_id;
}

std::optional<Translation> Machine::translate(ThreadState& ts, InstRecord& r, Tick& latency) {
  const bool prot = hier_.protected_mode();
  const bool instr = r.kind == InstKind::IFetch;
  const PageNum vpage = page_of(r.vaddr);
  const DomainId domain = ts.domain;
  Tlb& main = instr ? itlb_[ts.id.core] : dtlb_[ts.id.core];

  std::optional<PageMapping> m;
  bool walked = false;
  if (prot) {
    if (const TlbEntry* e = ts.ftlb.lookup(vpage, domain, true)) {
      m = PageMapping{e->ppage, e->perms};
      ++tlb_stats_.filter_hits;
    } else if (const TlbEntry* e2 = std::as_const(main).find(vpage, domain)) {
      m = PageMapping{e2->ppage, e2->perms};
      ++tlb_stats_.main_hits;
    }
  } else if (const TlbEntry* e = main.lookup(vpage, domain, true)) {
    m = PageMapping{e->ppage, e->perms};
    ++tlb_stats_.main_hits;
  }

  if (!m) {
    walked = true;
    ++tlb_stats_.walks;
    for (Addr a : PageTables::walk_addresses(domain, vpage)) latency += walk_read(ts, a, r.id);
    m = page_tables_.resolve(domain, vpage);
    if (!m) {
      ++tlb_stats_.faults;
      r.fault = ErrorCode::PageFault;
      return std::nullopt;
    }
    TlbEntry e{vpage, m->ppage, domain, m->perms, !prot, 0};
    if (prot) {
      ts.ftlb.insert(e);
    } else {
      main.insert(e);
    }
  }

  if ((m->perms & required_perm(r.kind)) == 0) {
    ++tlb_stats_.faults;
    r.fault = ErrorCode::PermissionFault;
    if (cfg_.flags.check_permissions_before_fill) return std::nullopt;
  }
  return Translation{vpage, m->ppage, domain, m->perms, walked};
}

Tick Machine::walk_read(ThreadState& ts, Addr pt_addr, InstId inst) {
  const LineAddr la = LineAddr::physical(pt_addr);
  if (!hier_.protected_mode()) return hier_.gets(ts.id, la.pline, true, false, now(), inst).latency;
  FilterCache& l0 = hier_.l0d(ts.id);
  if (l0.lookup_cpu(la) != nullptr) return l0.hit_latency();
  const Grant g = hier_.gets(ts.id, la.pline, true, false, now(), inst);
  // A walk never waits for a slot; if every way is pinned it reads around the filter cache.
  if (l0.fill(la, g.data, g.origin, true, false).installed && fill_hook_) {
    fill_hook_(hier_, ts.id, la.pline, g.data, false);
  }
  return g.latency;
}

void Machine::perform(ThreadState& ts, InstRecord& r, bool at_head) {
  const bool prot = hier_.protected_mode();
  const bool instr = r.kind == InstKind::IFetch;
  const Tick t0 = now();
  Tick tr_latency = 0;

  if (!r.translation) {
    auto tr = translate(ts, r, tr_latency);
    if (!tr) {
      r.level = Level::L0;
      resolve(ts, r, t0, tr_latency, 0, at_head);
      return;
    }
    r.translation = tr;
    r.paddr = (tr->ppage << kPageBits) | (r.vaddr & ((Addr{1} << kPageBits) - 1));
  }
  const LineAddr la = LineAddr::from(r.vaddr, r.paddr);

  if (r.kind == InstKind::Load) {
    for (auto it = ts.rob.rbegin(); it != ts.rob.rend(); ++it) {
      if (it->id >= r.id || it->kind != InstKind::Store || !it->translation) continue;
      if (line_of(it->paddr) != la.pline) continue;
      r.forwarded = true;
      r.value = it->store_value;
      r.level = Level::L0;
      ++ts.stats.forwarded;
      resolve(ts, r, t0, tr_latency + 1, 1, at_head);
      return;
    }
  }

  if (prot) {
    FilterCache& l0 = instr ? hier_.l0i(ts.id) : hier_.l0d(ts.id);
    if (const FilterLine* fl = l0.lookup_cpu(la)) {
      r.value = fl->data;
      r.level = Level::L0;
      r.lines_touched.push_back({la, fl->origin});
      resolve(ts, r, t0, tr_latency + l0.hit_latency(), l0.hit_latency(), at_head);
      return;
    }
    const Grant g = hier_.gets(ts.id, la.pline, !at_head, instr, t0, r.id);
    if (g.nack) {
      r.pending = Pending::Nacked;
      r.retry_not_before = t0 + tr_latency + g.latency;
      ++ts.stats.nacked;
      return;
    }
    if (!l0.fill(la, g.data, g.origin, true, g.se_eligible, at_head).installed) {
      r.pending = Pending::Blocked;
      r.retry_not_before = t0 + tr_latency + g.latency;
      ++ts.stats.blocked;
      return;
    }
    if (fill_hook_) fill_hook_(hier_, ts.id, la.pline, g.data, instr);
    r.value = g.data;
    r.level = g.origin;
    r.lines_touched.push_back({la, g.origin});
    MshrFile& mshr = instr ? ts.mshr_i : ts.mshr_d;
    const Tick service = tr_latency + g.latency;
    resolve(ts, r, mshr.acquire(t0, service), service, g.level_latency, at_head);
    return;
  }

  const Grant g = r.kind == InstKind::Store ? hier_.exclusive_prefetch(ts.id, la.pline, t0, r.id)
                                            : hier_.gets(ts.id, la.pline, true, instr, t0, r.id);
  r.value = g.data;
  r.level = g.origin;
  r.lines_touched.push_back({la, g.origin});
  const Tick service = tr_latency + g.latency;
  Tick start = t0;
  if (g.origin != Level::L1) {
    start = (instr ? l1_mshr_i_ : l1_mshr_d_)[ts.id.core].acquire(t0, service);
  }
  resolve(ts, r, start, service, g.level_latency, at_head);
}

void Machine::resolve(ThreadState& ts, InstRecord& r, Tick start, Tick service, Tick level_latency, bool at_head) {
  r.ready_tick = start + service;
  r.resolved = true;
  r.pending = Pending::None;
  if (r.kind == InstKind::Load && !r.fault && observer_ != nullptr) {
    observer_->on_load_bind(ts.id, r.id, line_of(r.paddr), r.value, r.forwarded);
  }
  if (access_logging_) {
    access_log_.push_back({now(), ts.id, r.id, mem_kind(r.kind), r.vaddr, r.paddr, r.level, level_latency,
                           r.latency(), at_head, r.forwarded});
  }
}

AccessResult Machine::commit(ThreadId t, InstId id) {
  ThreadState& ts = thread(t);
  if (record(ts, id) == nullptr) {
    throw SimError(ErrorCode::UnknownInstruction, "no in-flight instruction " + std::to_string(id) + " on " + to_string(t));
  }
  if (ts.rob.front().id != id) {
    throw SimError(ErrorCode::OutOfOrderCommit, "instruction " + std::to_string(id) + " is not the oldest on " +
                                                    to_string(t) + " (oldest is " +
                                                    std::to_string(ts.rob.front().id) + ")");
  }
  while (!ts.rob.front().resolved) {
    if (!events_.step([this](const Event& e) { dispatch(e); })) {
      throw SimError(ErrorCode::ScriptError, "instruction " + std::to_string(id) + " can never resolve");
    }
  }
  if (ts.rob.front().ready_tick > now()) advance_to(ts.rob.front().ready_tick);

  InstRecord& r = ts.rob.front();
  if (r.fault) {
    throw SimError(*r.fault, "commit of faulting instruction " + std::to_string(id) + " on " + to_string(t));
  }
  commit_actions(ts, r);
  const AccessResult res{r.id, r.latency(), r.ready_tick, r.value, r.level, r.fault};
  const std::optional<LineNum> line =
      r.is_memory() ? std::optional<LineNum>(line_of(r.paddr)) : std::nullopt;
  if (r.kind == InstKind::Load) --ts.loads;
  if (r.kind == InstKind::Store) --ts.stores;
  r.state = InstState::Committed;
  ts.rob.pop_front();
  ++ts.stats.committed;
  on_new_head(ts);
  check(ts, line);
  return res;
}

void Machine::commit_through(ThreadId t, InstId id) {
  ThreadState& ts = thread(t);
  while (!ts.rob.empty() && ts.rob.front().id <= id) commit(t, ts.rob.front().id);
}

void Machine::commit_all(ThreadId t) {
  ThreadState& ts = thread(t);
  while (!ts.rob.empty()) commit(t, ts.rob.front().id);
}

void Machine::commit_actions(ThreadState& ts, InstRecord& r) {
  if (r.kind == InstKind::Branch) return;
  const bool prot = hier_.protected_mode();
  const bool instr = r.kind == InstKind::IFetch;
  const LineNum pline = line_of(r.paddr);

  if (prot && r.translation) {
    const Translation& tr = *r.translation;
    Tlb& main = instr ? itlb_[ts.id.core] : dtlb_[ts.id.core];
    if (main.find(tr.vpage, tr.domain) != nullptr) {
      main.lookup(tr.vpage, tr.domain, true);
    } else {
      ++tlb_stats_.retranslations;
      for (Addr a : PageTables::walk_addresses(tr.domain, tr.vpage)) commit_line(ts, line_of(a), false, r.id);
      main.insert({tr.vpage, tr.ppage, tr.domain, tr.perms, true, 0});
      ++tlb_stats_.promotions;
    }
    if (TlbEntry* fe = ts.ftlb.find(tr.vpage, tr.domain)) fe->committed = true;
  }

  if (r.kind == InstKind::Store) {
    const bool own_held = hier_.l1d(ts.id.core).contains(pline);
    hier_.getx(ts.id, pline, r.store_value, false, now(), r.id);
    if (prot && !own_held && cfg_.prefetch.enabled) hier_.prefetcher().notify({pline, Level::L2, r.id, ts.id});
    if (observer_ != nullptr) observer_->on_store_commit(ts.id, r.id, pline, r.store_value);
  } else if (!r.forwarded) {
    commit_line(ts, pline, instr, r.id);
  }
  schedule_prefetch_drain();
}

void Machine::commit_line(ThreadState& ts, LineNum pline, bool instruction, InstId inst) {
  const CommitLineResult res = hier_.commit_line(ts.id, pline, instruction, now(), inst);
  if (res.launch_se) {
    events_.schedule(now() + cfg_.caches.l2.hit_latency, Event{Event::Kind::SeUpgrade, ts.id, inst, pline});
  }
}

void Machine::squash(ThreadId t, InstId after) {
  ThreadState& ts = thread(t);
  while (!ts.rob.empty() && ts.rob.back().id > after) {
    InstRecord& r = ts.rob.back();
    if (r.retry) events_.cancel(*r.retry);
    if (r.kind == InstKind::Load) --ts.loads;
    if (r.kind == InstKind::Store) --ts.stores;
    r.state = InstState::Squashed;
    ++ts.stats.squashed;
    ts.rob.pop_back();
  }
  if (cfg_.clear_on_squash()) {
    hier_.l0d(t).flush();
    hier_.l0i(t).flush();
    ts.ftlb.flush();
  }
  on_new_head(ts);
  check(ts, std::nullopt);
}

Tick Machine::domain_switch(ThreadId t, DomainId d, SwitchCause cause) {
  ThreadState& ts = thread(t);
  if (!ts.rob.empty()) {
    throw SimError(ErrorCode::InFlightRemains, std::to_string(ts.rob.size()) + " instruction(s) in flight on " +
                                                   to_string(t) + " at " + std::string(to_string(cause)) +
                                                   " switch");
  }
  const Tick before = now();
  if (hier_.protected_mode()) {
    hier_.l0d(t).flush();
    hier_.l0i(t).flush();
    ts.ftlb.flush();
  }
  ts.domain = d;
  ++ts.stats.domain_switches;
  advance(1);
  check(ts, std::nullopt);
  return now() - before;
}

void Machine::on_new_head(ThreadState& ts) {
  if (ts.rob.empty()) return;
  InstRecord& r = ts.rob.front();
  if (r.pending != Pending::None && !r.retry) {
    r.retry = events_.schedule(std::max(now(), r.retry_not_before), Event{Event::Kind::Retry, ts.id, r.id, 0});
  }
}

void Machine::schedule_prefetch_drain() {
  if (drain_scheduled_ || !hier_.prefetcher().has_queued()) return;
  events_.schedule(now() + 1, Event{Event::Kind::PrefetchDrain, {}, 0, 0});
  drain_scheduled_ = true;
}

void Machine::dispatch(const Event& e) {
  switch (e.kind) {
    case Event::Kind::Retry: {
      ThreadState& ts = thread(e.thread);
      InstRecord* r = record(ts, e.inst);
      if (r == nullptr) return;
      r->retry.reset();
      perform(ts, *r, true);
      schedule_prefetch_drain();
      check(ts, r->translation ? std::optional<LineNum>(line_of(r->paddr)) : std::nullopt);
      break;
    }
    case Event::Kind::SeUpgrade:
      hier_.se_upgrade(e.thread.core, e.line, now());
      if (cfg_.check_invariants) invariant_checks_ += hier_.check_line(e.line);
      break;
    case Event::Kind::PrefetchDrain:
      drain_scheduled_ = false;
      hier_.prefetch_one(now());
      schedule_prefetch_drain();
      break;
  }
}

void Machine::advance(Tick n) { advance_to(now() + n); }

void Machine::advance_to(Tick t) {
  events_.run_until(t, [this](const Event& e) { dispatch(e); });
}

void Machine::drain() {
  events_.run_all([this](const Event& e) { dispatch(e); });
}

void Machine::check(ThreadState& ts, std::optional<LineNum> line) {
  if (!cfg_.check_invariants) return;
  hier_.l0d(ts.id).check_invariants();
  hier_.l0i(ts.id).check_invariants();
  invariant_checks_ += 2;
  if (line) invariant_checks_ += hier_.check_line(*line);
}

std::uint64_t Machine::audit() {
  const std::uint64_t n = hier_.audit();
  invariant_checks_ += n;
  return n;
}

StatsSnapshot Machine::stats() const {
  StatsSnapshot s;
  s.ticks = now();
  for (unsigned c = 0; c < cfg_.cores; ++c) {
    s.l1d += hier_.l1d(c).stats();
    s.l1i += hier_.l1i(c).stats();
  }
  s.l2 = hier_.l2().stats();
  for (const ThreadState& ts : threads_) {
    ThreadStats t = ts.stats;
    t.l0d = hier_.l0d(ts.id).stats();
    t.l0i = hier_.l0i(ts.id).stats();
    s.l0d += t.l0d;
    s.l0i += t.l0i;
    s.threads[to_string(ts.id)] = t;
  }
  s.bus = hier_.bus();
  s.prefetch = hier_.prefetcher().stats();
  s.tlb = tlb_stats_;
  s.invariant_checks = invariant_checks_;
  return s;
}

NonSpecState Machine::nonspec_state() const {
  NonSpecState s;
  for (unsigned c = 0; c < cfg_.cores; ++c) {
    s.l1d.push_back(hier_.l1d(c).snapshot());
    s.l1i.push_back(hier_.l1i(c).snapshot());
    s.itlb.push_back(itlb_[c].snapshot());
    s.dtlb.push_back(dtlb_[c].snapshot());
  }
  s.l2 = hier_.l2().snapshot();
  s.prefetch_table = hier_.prefetcher().table_snapshot();
  s.prefetch_training = hier_.prefetcher().training_log();
  s.prefetch_issues = hier_.prefetch_issues();
  return s;
}

}  // namespace mtsim
