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
#include <vector>

#include "mtsim/common.hpp"
#include "mtsim/config.hpp"
#include "mtsim/filter_cache.hpp"
#include "mtsim/ns_cache.hpp"
#include "mtsim/prefetch.hpp"
#include "mtsim/stats.hpp"

namespace mtsim {

enum class MsgKind : std::uint8_t { GetS, GetX, Upgrade, SEUpgrade, Nack, Data, InvFilterBroadcast, WritebackThrough };

std::string_view to_string(MsgKind k);

struct CoherenceMsg {
  Tick tick = 0;
  MsgKind kind = MsgKind::GetS;
  LineNum line = 0;
  ThreadId requester;
  bool speculative = false;
  InstId inst = 0;

  std::string format() const;
};

// Response to a read request.
struct Grant {
  bool nack = false;
  std::uint64_t data = 0;
  Level origin = Level::Memory;  // L1, L2 or Memory
  bool se_eligible = false;      // no L1 anywhere holds the line
  Tick latency = 0;              // full lookup path, first private level included
  Tick level_latency = 0;        // hit latency of the serving level alone
};

struct CommitLineResult {
  bool traffic = false;     // something left the filter cache
  bool launch_se = false;   // caller schedules se_upgrade
};

// The shared memory side of the machine: per-core L1I/L1D, the shared L2,
// flat memory, the per-thread filter caches (reached only from the memory
// side here), the L2 prefetcher and the snooping bus that ties them
// together.
class Hierarchy {
 public:
  explicit Hierarchy(const RunConfig& cfg);

  const RunConfig& config() const { return cfg_; }
  bool protected_mode() const { return protected_; }
  unsigned cores() const { return cfg_.cores; }
  unsigned threads_per_core() const { return cfg_.threads_per_core; }
  std::size_t flat(ThreadId t) const { return std::size_t{t.core} * cfg_.threads_per_core + t.thread; }

  NsCache& l1d(unsigned core) { return l1d_.at(core); }
  const NsCache& l1d(unsigned core) const { return l1d_.at(core); }
  NsCache& l1i(unsigned core) { return l1i_.at(core); }
  const NsCache& l1i(unsigned core) const { return l1i_.at(core); }
  NsCache& l2() { return l2_; }
  const NsCache& l2() const { return l2_; }
  FilterCache& l0d(ThreadId t) { return l0d_.at(flat(t)); }
  const FilterCache& l0d(ThreadId t) const { return l0d_.at(flat(t)); }
  FilterCache& l0i(ThreadId t) { return l0i_.at(flat(t)); }
  const FilterCache& l0i(ThreadId t) const { return l0i_.at(flat(t)); }
  StridePrefetcher& prefetcher() { return prefetcher_; }
  const StridePrefetcher& prefetcher() const { return prefetcher_; }
  BusStats& bus() { return bus_; }
  const BusStats& bus() const { return bus_; }

  // Latency of a request served at `level`, counted from the start of the
  // lookup in the requester's first private cache.
  Tick path_latency(Level level, bool instruction) const;

  // Read request from `req` after missing its filter cache (protected) or
  // from the core itself (unprotected). Speculative requests never change
  // non-speculative state under protection: a remote M/E copy earns a Nack
  // instead. Unprotected requests fill the requester's L1 (and the L2 when
  // served from memory).
  Grant gets(ThreadId req, LineNum pline, bool speculative, bool instruction, Tick now, InstId inst = 0);

  // Exclusive acquisition for a committed store. Returns the write latency.
  Tick getx(ThreadId req, LineNum pline, std::uint64_t value, bool speculative, Tick now, InstId inst = 0);

  // Unprotected baseline only: a speculative store takes its line exclusive
  // at issue without writing it.
  Grant exclusive_prefetch(ThreadId req, LineNum pline, Tick now, InstId inst = 0);

  // Externalises a line touched by a committing instruction.
  CommitLineResult commit_line(ThreadId t, LineNum pline, bool instruction, Tick now, InstId inst = 0);

  // Asynchronous L1 S -> E upgrade. Returns false if it aborted.
  bool se_upgrade(unsigned core, LineNum pline, Tick now);

  // Issues the oldest queued prefetch. Returns true if one was dequeued.
  bool prefetch_one(Tick now);

  // Current architectural value of a line.
  std::uint64_t value_of(LineNum pline) const;
  void poke(LineNum pline, std::uint64_t value);

  // Copies a line into a core's L1 (as S) and into L2 as an inclusive
  // hierarchy would on a filter fill. Only for modelling such a hierarchy.
  void mirror_fill(unsigned core, bool instruction, LineNum pline, std::uint64_t data);

  // Invalidates pline in the filter caches of every thread not on
  // skip_core (-1 for none) and other than skip_thread. Returns the number
  // of copies removed.
  std::size_t broadcast_filter_invalidate(LineNum pline, int skip_core, const ThreadId* skip_thread);

  // Throws InvariantViolation. Returns the number of checks made.
  std::uint64_t check_line(LineNum pline) const;
  std::uint64_t audit() const;

  // Lines the prefetcher actually filled, in order.
  const std::vector<LineNum>& prefetch_issues() const { return prefetch_issues_; }

  void set_logging(bool on) { logging_ = on; }
  const std::vector<CoherenceMsg>& log() const { return log_; }

 private:
  void record(Tick now, MsgKind k, LineNum line, ThreadId req, bool spec, InstId inst);
  void fill_l1(unsigned core, bool instruction, LineNum pline, Mesi st, std::uint64_t data, bool dirty,
               FillSource src);
  void fill_l2(LineNum pline, std::uint64_t data, bool dirty, FillSource src);
  bool other_l1_holds(unsigned core, LineNum pline) const;
  bool any_l1_holds(LineNum pline) const;
  int remote_owner(unsigned core, LineNum pline) const;  // core holding M/E, or -1
  void downgrade(unsigned owner, LineNum pline, Tick now, ThreadId req, InstId inst);

  RunConfig cfg_;
  bool protected_;
  std::vector<NsCache> l1d_;
  std::vector<NsCache> l1i_;
  NsCache l2_;
  std::map<LineNum, std::uint64_t> memory_;
  std::vector<FilterCache> l0d_;
  std::vector<FilterCache> l0i_;
  StridePrefetcher prefetcher_;
  BusStats bus_;
  bool logging_ = false;
  std::vector<CoherenceMsg> log_;
  std::vector<LineNum> prefetch_issues_;
};

}  // namespace mtsim
