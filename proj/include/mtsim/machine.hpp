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

#include <array>
#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <vector>

#include "mtsim/coherence.hpp"
#include "mtsim/common.hpp"
#include "mtsim/config.hpp"
#include "mtsim/sim_kernel.hpp"
#include "mtsim/stats.hpp"
#include "mtsim/tlb.hpp"

namespace mtsim {

struct MemOp {
  MemKind kind = MemKind::Load;
  Addr vaddr = 0;
  std::uint64_t value = 0;  // stores only
  InstId inst_id = 0;       // 0 picks the next id on the thread
};

enum class InstKind : std::uint8_t { Load, Store, IFetch, Branch };
enum class InstState : std::uint8_t { InFlight, Committed, Squashed };
enum class Pending : std::uint8_t { None, Nacked, Blocked };

std::string_view to_string(InstKind k);

struct TouchedLine {
  LineAddr addr;
  Level origin = Level::Memory;
};

struct Translation {
  PageNum vpage = 0;
  PageNum ppage = 0;
  DomainId domain;
  std::uint8_t perms = kPermAll;
  bool walked = false;
};

struct Event {
  enum class Kind : std::uint8_t { Retry, SeUpgrade, PrefetchDrain };
  Kind kind = Kind::Retry;
  ThreadId thread;
  InstId inst = 0;
  LineNum line = 0;
};

using EventHandle = EventQueue<Event>::Handle;

struct InstRecord {
  InstId id = 0;
  InstKind kind = InstKind::Load;
  Addr vaddr = 0;
  Addr paddr = 0;
  std::uint64_t store_value = 0;
  InstState state = InstState::InFlight;
  Tick issue_tick = 0;
  Tick ready_tick = 0;
  bool resolved = false;
  std::uint64_t value = 0;
  Level level = Level::L0;
  std::optional<ErrorCode> fault;
  Pending pending = Pending::None;
  Tick retry_not_before = 0;
  std::optional<EventHandle> retry;
  bool forwarded = false;
  std::vector<TouchedLine> lines_touched;
  std::optional<Translation> translation;

  bool is_memory() const { return kind != InstKind::Branch; }
  Tick latency() const { return ready_tick - issue_tick; }
};

struct AccessResult {
  InstId inst = 0;
  Tick latency = 0;
  Tick ready_tick = 0;
  std::uint64_t value = 0;
  Level level = Level::L0;
  std::optional<ErrorCode> fault;
};

struct AccessLogEntry {
  Tick tick = 0;  // when the access was performed
  ThreadId thread;
  InstId inst = 0;
  MemKind kind = MemKind::Load;
  Addr vaddr = 0;
  Addr paddr = 0;
  Level level = Level::L0;
  Tick level_latency = 0;  // the serving level's own hit latency
  Tick latency = 0;        // issue to completion
  bool retried = false;
  bool forwarded = false;
};

class MachineObserver {
 public:
  virtual ~MachineObserver() = default;
  virtual void on_load_bind(ThreadId, InstId, LineNum /*pline*/, std::uint64_t /*value*/, bool /*forwarded*/) {}
  virtual void on_store_commit(ThreadId, InstId, LineNum /*pline*/, std::uint64_t /*value*/) {}
};

// Called after every filter-cache fill made on behalf of a core access.
using FilterFillHook = std::function<void(Hierarchy&, ThreadId, LineNum pline, std::uint64_t data, bool instruction)>;

// Caps outstanding misses from one cache; excess misses start when the
// earliest outstanding one completes.
class MshrFile {
 public:
  explicit MshrFile(unsigned capacity = 4) : capacity_(capacity) {}
  Tick acquire(Tick now, Tick service);
  std::size_t outstanding(Tick now) const;

 private:
  unsigned capacity_;
  std::vector<Tick> busy_until_;
};

struct ThreadState {
  ThreadId id;
  DomainId domain;
  std::deque<InstRecord> rob;
  InstId last_id = 0;
  unsigned loads = 0;
  unsigned stores = 0;
  Tlb ftlb;
  MshrFile mshr_d;
  MshrFile mshr_i;
  ThreadStats stats;

  ThreadState(ThreadId t, const RunConfig& cfg)
      : id(t), ftlb(cfg.tlb.filter_entries), mshr_d(cfg.filter.mshrs), mshr_i(cfg.filter.mshrs) {}
};

// What the purity property compares: everything outside the filter
// structures that speculation could have touched.
struct NonSpecState {
  std::vector<NsSnapshot> l1d;
  std::vector<NsSnapshot> l1i;
  NsSnapshot l2;
  std::vector<std::vector<Tlb::SnapEntry>> itlb;
  std::vector<std::vector<Tlb::SnapEntry>> dtlb;
  std::vector<StrideEntry> prefetch_table;
  std::vector<LineNum> prefetch_training;
  std::vector<LineNum> prefetch_issues;

  bool operator==(const NonSpecState&) const = default;
};

// A whole simulated system: cores with scripted in-order commit queues over
// the memory hierarchy, translation, and the event kernel. Copyable, so
// exploration code can fork it.
class Machine {
 public:
  explicit Machine(const RunConfig& cfg);

  const RunConfig& config() const { return cfg_; }
  Tick now() const { return events_.now(); }

  // Core side.
  InstId issue(ThreadId t, const MemOp& op);
  InstId issue_branch(ThreadId t);
  AccessResult commit(ThreadId t, InstId id);
  void commit_through(ThreadId t, InstId id);
  void commit_all(ThreadId t);
  void squash(ThreadId t, InstId after);
  Tick domain_switch(ThreadId t, DomainId d, SwitchCause cause);

  std::optional<AccessResult> result(ThreadId t, InstId id) const;
  const InstRecord* find(ThreadId t, InstId id) const;
  const std::deque<InstRecord>& in_flight(ThreadId t) const { return thread(t).rob; }
  DomainId domain(ThreadId t) const { return thread(t).domain; }
  InstId last_id(ThreadId t) const { return thread(t).last_id; }

  // Clock.
  void advance(Tick n);
  void advance_to(Tick t);
  void drain();
  bool idle() const { return events_.empty(); }

  // Memory and page tables.
  PageTables& page_tables() { return page_tables_; }
  const PageTables& page_tables() const { return page_tables_; }
  void poke(Addr paddr, std::uint64_t value) { hier_.poke(line_of(paddr), value); }
  std::uint64_t peek(Addr paddr) const { return hier_.value_of(line_of(paddr)); }
  std::optional<Addr> physical(DomainId d, Addr vaddr) const;

  // Structures.
  Hierarchy& hierarchy() { return hier_; }
  const Hierarchy& hierarchy() const { return hier_; }
  const Tlb& main_dtlb(unsigned core) const { return dtlb_.at(core); }
  const Tlb& main_itlb(unsigned core) const { return itlb_.at(core); }
  const Tlb& filter_tlb(ThreadId t) const { return thread(t).ftlb; }
  const FilterCache& l0d(ThreadId t) const { return hier_.l0d(t); }
  const FilterCache& l0i(ThreadId t) const { return hier_.l0i(t); }

  std::vector<ThreadId> threads() const;
  StatsSnapshot stats() const;
  NonSpecState nonspec_state() const;
  std::uint64_t audit();

  // Diagnostics.
  void set_access_logging(bool on) { access_logging_ = on; }
  const std::vector<AccessLogEntry>& access_log() const { return access_log_; }
  void set_coherence_logging(bool on) { hier_.set_logging(on); }
  void set_observer(MachineObserver* o) { observer_ = o; }
  void set_filter_fill_hook(FilterFillHook hook) { fill_hook_ = std::move(hook); }

 private:
  ThreadState& thread(ThreadId t);
  const ThreadState& thread(ThreadId t) const;
  InstRecord* record(ThreadState& ts, InstId id);

  void perform(ThreadState& ts, InstRecord& r, bool at_head);
  std::optional<Translation> translate(ThreadState& ts, InstRecord& r, Tick& latency);
  Tick walk_read(ThreadState& ts, Addr pt_addr, InstId inst);
  void resolve(ThreadState& ts, InstRecord& r, Tick start, Tick service, Tick level_latency, bool at_head);
  void commit_actions(ThreadState& ts, InstRecord& r);
  void commit_line(ThreadState& ts, LineNum pline, bool instruction, InstId inst);
  void on_new_head(ThreadState& ts);
  void schedule_prefetch_drain();
  void dispatch(const Event& e);
  void check(ThreadState& ts, std::optional<LineNum> line);

  RunConfig cfg_;
  Hierarchy hier_;
  PageTables page_tables_;
  std::vector<Tlb> itlb_;
  std::vector<Tlb> dtlb_;
  std::vector<MshrFile> l1_mshr_d_;
  std::vector<MshrFile> l1_mshr_i_;
  std::vector<ThreadState> threads_;
  EventQueue<Event> events_;
  bool drain_scheduled_ = false;
  TlbStats tlb_stats_;
  std::uint64_t invariant_checks_ = 0;
  bool access_logging_ = false;
  std::vector<AccessLogEntry> access_log_;
  MachineObserver* observer_ = nullptr;
  FilterFillHook fill_hook_;
};

}  // namespace mtsim
