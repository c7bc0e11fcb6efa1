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

#include "mtsim/coherence.hpp"
#include "mtsim/common.hpp"
#include "mtsim/config.hpp"
#include "mtsim/machine.hpp"
#include "mtsim/stats.hpp"

namespace mtsim {

enum class TraceOp : std::uint8_t { Load, Store, IFetch, SpecBegin, Squash, CommitTo, Switch, Barrier, Map };

std::string_view to_string(TraceOp op);

// One step of a trace file. Thread-scoped lines look like
//
//   <core>.<thread> LOAD <vaddr> [dep]
//   <core>.<thread> STORE <vaddr> <value>
//   <core>.<thread> IFETCH <vaddr>
//   <core>.<thread> SPEC_BEGIN
//   <core>.<thread> SQUASH
//   <core>.<thread> COMMIT_TO <inst_id>
//   <core>.<thread> SWITCH <process>:<sandbox> <context|syscall|sandbox>
//   <core>.<thread> BARRIER
//
// and page mappings are declared with
//
//   * MAP <process> <vpage> <ppage> <perms>
//
// Numbers are decimal or 0x-prefixed hex; '#' starts a comment. Instruction
// ids are implicit: each memory op and each SPEC_BEGIN on a thread takes the
// next id, starting at 1.
struct TraceRecord {
  ThreadId thread;
  TraceOp op = TraceOp::Load;
  Addr vaddr = 0;
  std::uint64_t value = 0;
  bool dep = false;
  InstId inst = 0;  // COMMIT_TO target
  DomainId domain;
  SwitchCause cause = SwitchCause::ContextSwitch;
  unsigned process = 0;  // MAP
  PageNum vpage = 0;
  PageNum ppage = 0;
  std::uint8_t perms = kPermAll;
  std::size_t line = 0;  // source line, 0 when generated

  bool operator==(const TraceRecord& o) const;
};

struct Trace {
  std::vector<TraceRecord> records;

  bool empty() const { return records.empty(); }
  std::size_t memory_ops() const;
};

Trace parse_trace(std::string_view text);
Trace load_trace(const std::string& path);
std::string format_record(const TraceRecord& r);
std::string format_trace(const Trace& t);

struct RunOptions {
  bool log_events = false;
  std::uint64_t stall_limit = 1'000'000;  // cycles without progress before giving up
};

struct RunResult {
  StatsSnapshot stats;
  std::vector<AccessLogEntry> accesses;
  std::vector<CoherenceMsg> coherence;
};

// Replays a trace. Each thread issues at most one step per cycle; a `dep`
// load waits for the thread's previous memory op to complete. When a queue
// is full the oldest instruction is committed automatically, never past an
// open SPEC_BEGIN. Everything still in flight commits at the end.
RunResult run_trace(const RunConfig& cfg, const Trace& trace, const RunOptions& opts = {});

}  // namespace mtsim
