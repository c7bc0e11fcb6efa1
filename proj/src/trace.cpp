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

#include "mtsim/trace.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

namespace mtsim {

std::string_view to_string(TraceOp op) {
  switch (op) {
    case TraceOp::Load: return "LOAD";
    case TraceOp::Store: return "STORE";
    case TraceOp::IFetch: return "IFETCH";
    case TraceOp::SpecBegin: return "SPEC_BEGIN";
    case TraceOp::Squash: return "SQUASH";
    case TraceOp::CommitTo: return "COMMIT_TO";
    case TraceOp::Switch: return "SWITCH";
    case TraceOp::Barrier: return "BARRIER";
    case TraceOp::Map: return "MAP";
  }
  return "?";
}

bool TraceRecord::operator==(const TraceRecord& o) const {
  return thread == o.thread && op == o.op && vaddr == o.vaddr && value == o.value && dep == o.dep &&
         inst == o.inst && domain == o.domain && cause == o.cause && process == o.process && vpage == o.vpage &&
         ppage == o.ppage && perms == o.perms;
}

std::size_t Trace::memory_ops() const {
  return static_cast<std::size_t>(std::count_if(records.begin(), records.end(), [](const TraceRecord& r) {
    return r.op == TraceOp::Load || r.op == TraceOp::Store || r.op == TraceOp::IFetch;
  }));
}

namespace {

[[noreturn]] void parse_fail(std::size_t line, const std::string& what) {
  throw SimError(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + what);
}

std::uint64_t number(std::string_view s, std::size_t line) {
  int base = 10;
  if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
    s.remove_prefix(2);
    base = 16;
  }
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v, base);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty()) {
    parse_fail(line, "bad number '" + std::string(s) + "'");
  }
  return v;
}

unsigned small(std::string_view s, std::size_t line) {
  const std::uint64_t v = number(s, line);
  if (v > 0xffffffffu) parse_fail(line, "value out of range '" + std::string(s) + "'");
  return static_cast<unsigned>(v);
}

std::string hex(std::uint64_t v) {
  std::ostringstream os;
  os << "0x" << std::hex << v;
  return os.str();
}

}  // namespace

Trace parse_trace(std::string_view text) {
  Trace trace;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);

    std::vector<std::string_view> tok;
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
      std::size_t j = i;
      while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
      if (j > i) tok.push_back(line.substr(i, j - i));
      i = j;
    }
    if (tok.empty()) {
      if (end == text.size()) break;
      continue;
    }

    TraceRecord r;
    r.line = line_no;
    auto expect = [&](std::size_t lo, std::size_t hi) {
      if (tok.size() < lo || tok.size() > hi) {
        parse_fail(line_no, std::string(tok[1]) + " takes " + std::to_string(lo - 2) +
                                (hi > lo ? "-" + std::to_string(hi - 2) : "") + " argument(s)");
      }
    };
    if (tok.size() < 2) parse_fail(line_no, "expected '<core>.<thread> <op> ...'");

    if (tok[0] == "*") {
      if (tok[1] != "MAP") parse_fail(line_no, "unknown global directive '" + std::string(tok[1]) + "'");
      expect(6, 6);
      r.op = TraceOp::Map;
      r.process = small(tok[2], line_no);
      r.vpage = number(tok[3], line_no);
      r.ppage = number(tok[4], line_no);
      try {
        r.perms = parse_perms(tok[5]);
      } catch (const SimError& e) {
        parse_fail(line_no, e.what());
      }
      trace.records.push_back(r);
      if (end == text.size()) break;
      continue;
    }

    const auto dot = tok[0].find('.');
    if (dot == std::string_view::npos) parse_fail(line_no, "bad thread '" + std::string(tok[0]) + "'");
    r.thread = {small(tok[0].substr(0, dot), line_no), small(tok[0].substr(dot + 1), line_no)};

    const std::string_view op = tok[1];
    if (op == "LOAD") {
      expect(3, 4);
      r.op = TraceOp::Load;
      r.vaddr = number(tok[2], line_no);
      if (tok.size() == 4) {
        if (tok[3] != "dep") parse_fail(line_no, "expected 'dep', got '" + std::string(tok[3]) + "'");
        r.dep = true;
      }
    } else if (op == "STORE") {
      expect(4, 4);
      r.op = TraceOp::Store;
      r.vaddr = number(tok[2], line_no);
      r.value = number(tok[3], line_no);
    } else if (op == "IFETCH") {
      expect(3, 3);
      r.op = TraceOp::IFetch;
      r.vaddr = number(tok[2], line_no);
    } else if (op == "SPEC_BEGIN") {
      expect(2, 2);
      r.op = TraceOp::SpecBegin;
    } else if (op == "SQUASH") {
      expect(2, 2);
      r.op = TraceOp::Squash;
    } else if (op == "COMMIT_TO") {
      expect(3, 3);
      r.op = TraceOp::CommitTo;
      r.inst = number(tok[2], line_no);
    } else if (op == "SWITCH") {
      expect(4, 4);
      r.op = TraceOp::Switch;
      const auto colon = tok[2].find(':');
      if (colon == std::string_view::npos) parse_fail(line_no, "domain must be <process>:<sandbox>");
      r.domain = {small(tok[2].substr(0, colon), line_no), small(tok[2].substr(colon + 1), line_no)};
      try {
        r.cause = parse_switch_cause(tok[3]);
      } catch (const SimError& e) {
        parse_fail(line_no, e.what());
      }
    } else if (op == "BARRIER") {
      expect(2, 2);
      r.op = TraceOp::Barrier;
    } else {
      parse_fail(line_no, "unknown op '" + std::string(op) + "'");
    }
    trace.records.push_back(r);
    if (end == text.size()) break;
  }
  return trace;
}

Trace load_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SimError(ErrorCode::ParseError, "cannot open trace '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_trace(ss.str());
}

std::string format_record(const TraceRecord& r) {
  if (r.op == TraceOp::Map) {
    return "* MAP " + std::to_string(r.process) + " " + hex(r.vpage) + " " + hex(r.ppage) + " " +
           perms_to_string(r.perms);
  }
  std::string s = to_string(r.thread) + " " + std::string(to_string(r.op));
  switch (r.op) {
    case TraceOp::Load:
      s += " " + hex(r.vaddr);
      if (r.dep) s += " dep";
      break;
    case TraceOp::Store: s += " " + hex(r.vaddr) + " " + std::to_string(r.value); break;
    case TraceOp::IFetch: s += " " + hex(r.vaddr); break;
    case TraceOp::CommitTo: s += " " + std::to_string(r.inst); break;
    case TraceOp::Switch: s += " " + to_string(r.domain) + " " + std::string(to_string(r.cause)); break;
    default: break;
  }
  return s;
}

std::string format_trace(const Trace& t) {
  std::string out;
  for (const TraceRecord& r : t.records) {
    out += format_record(r);
    out += '\n';
  }
  return out;
}

namespace {

struct Cursor {
  ThreadId id;
  std::vector<const TraceRecord*> steps;
  std::size_t pc = 0;
  std::vector<InstId> open;  // SPEC_BEGIN markers not yet squashed
  InstId last_mem = 0;

  bool done() const { return pc >= steps.size(); }
  const TraceRecord& cur() const { return *steps[pc]; }
};

class Runner {
 public:
  Runner(const RunConfig& cfg, const Trace& trace, const RunOptions& opts) : m_(cfg), opts_(opts) {
    m_.set_access_logging(opts.log_events);
    m_.set_coherence_logging(opts.log_events);
    std::map<ThreadId, Cursor> by_thread;
    for (const TraceRecord& r : trace.records) {
      if (r.op == TraceOp::Map) {
        m_.page_tables().map(r.process, r.vpage, {r.ppage, r.perms});
        continue;
      }
      if (r.thread.core >= cfg.cores || r.thread.thread >= cfg.threads_per_core) {
        throw SimError(ErrorCode::ScriptError, "line " + std::to_string(r.line) + ": no thread " +
                                                   to_string(r.thread) + " in this configuration");
      }
      Cursor& c = by_thread[r.thread];
      c.id = r.thread;
      c.steps.push_back(&r);
    }
    for (auto& [id, c] : by_thread) cursors_.push_back(std::move(c));
  }

  RunResult run() {
    std::uint64_t stalled = 0;
    while (std::any_of(cursors_.begin(), cursors_.end(), [](const Cursor& c) { return !c.done(); })) {
      bool progress = release_barrier();
      for (Cursor& c : cursors_) {
        if (!c.done()) progress |= step(c);
      }
      m_.advance(1);
      stalled = progress ? 0 : stalled + 1;
      if (stalled > opts_.stall_limit) {
        const Cursor* c = &*std::find_if(cursors_.begin(), cursors_.end(), [](const Cursor& x) { return !x.done(); });
        throw SimError(ErrorCode::ScriptError, "no progress for " + std::to_string(opts_.stall_limit) +
                                                   " cycles at line " + std::to_string(c->cur().line) + " (" +
                                                   format_record(c->cur()) + ")");
      }
    }
    for (Cursor& c : cursors_) {
      while (!m_.in_flight(c.id).empty()) commit_head(c, true);
    }
    m_.drain();
    return {m_.stats(), m_.access_log(), m_.hierarchy().log()};
  }

 private:
  bool release_barrier() {
    bool any = false;
    for (const Cursor& c : cursors_) {
      if (c.done()) continue;
      if (c.cur().op != TraceOp::Barrier) return false;
      any = true;
    }
    if (!any) return false;
    for (Cursor& c : cursors_) {
      if (!c.done()) ++c.pc;
    }
    return true;
  }

  bool full(const Cursor& c, TraceOp op) const {
    const auto& rob = m_.in_flight(c.id);
    const CoreConfig& core = m_.config().core;
    if (rob.size() >= core.rob_entries) return true;
    if (op == TraceOp::Load) {
      return std::count_if(rob.begin(), rob.end(), [](const InstRecord& r) { return r.kind == InstKind::Load; }) >=
             core.lq_entries;
    }
    if (op == TraceOp::Store) {
      return std::count_if(rob.begin(), rob.end(), [](const InstRecord& r) { return r.kind == InstKind::Store; }) >=
             core.sq_entries;
    }
    return false;
  }

  // Commits (or retires with a squash, if it faulted) the oldest instruction.
  // Without `wait`, only an instruction that has already completed goes.
  bool commit_head(Cursor& c, bool wait) {
    const auto& rob = m_.in_flight(c.id);
    if (rob.empty()) return false;
    const InstRecord& h = rob.front();
    if (!wait && (!h.resolved || h.ready_tick > m_.now())) return false;
    const InstId id = h.id;
    if (wait && !h.resolved) {
      // Let commit() run the clock forward for us, except for faults, which
      // are only known once resolved.
      while (!m_.in_flight(c.id).front().resolved) m_.advance(1);
    }
    if (m_.in_flight(c.id).front().fault) {
      m_.squash(c.id, id - 1);
      std::erase_if(c.open, [id](InstId m) { return m >= id; });
      return true;
    }
    m_.commit(c.id, id);
    std::erase(c.open, id);
    return true;
  }

  bool make_room(Cursor& c, TraceOp op) {
    if (!full(c, op)) return true;
    const auto& rob = m_.in_flight(c.id);
    if (!c.open.empty() && rob.front().id >= c.open.front()) return false;
    commit_head(c, false);
    return !full(c, op);
  }

  bool step(Cursor& c) {
    const TraceRecord& r = c.cur();
    switch (r.op) {
      case TraceOp::Load:
      case TraceOp::Store:
      case TraceOp::IFetch: {
        if (r.dep && c.last_mem != 0) {
          const InstRecord* prev = m_.find(c.id, c.last_mem);
          if (prev != nullptr && (!prev->resolved || prev->ready_tick > m_.now())) return false;
        }
        if (!make_room(c, r.op)) return false;
        const MemKind k = r.op == TraceOp::Load ? MemKind::Load : r.op == TraceOp::Store ? MemKind::Store : MemKind::IFetch;
        c.last_mem = m_.issue(c.id, MemOp{k, r.vaddr, r.value, 0});
        ++c.pc;
        return true;
      }
      case TraceOp::SpecBegin:
        if (!make_room(c, r.op)) return false;
        c.open.push_back(m_.issue_branch(c.id));
        ++c.pc;
        return true;
      case TraceOp::Squash:
        if (c.open.empty()) {
          throw SimError(ErrorCode::ScriptError, "line " + std::to_string(r.line) + ": SQUASH without SPEC_BEGIN");
        }
        m_.squash(c.id, c.open.back());
        c.open.pop_back();
        ++c.pc;
        return true;
      case TraceOp::CommitTo: {
        bool progress = false;
        while (true) {
          const auto& rob = m_.in_flight(c.id);
          if (rob.empty() || rob.front().id > r.inst) {
            ++c.pc;
            return true;
          }
          if (!commit_head(c, false)) return progress;
          progress = true;
        }
      }
      case TraceOp::Switch: {
        bool progress = false;
        while (!m_.in_flight(c.id).empty()) {
          if (!commit_head(c, false)) return progress;
          progress = true;
        }
        c.open.clear();
        m_.domain_switch(c.id, r.domain, r.cause);
        ++c.pc;
        return true;
      }
      case TraceOp::Barrier:
      case TraceOp::Map:
        return false;
    }
    return false;
  }

  Machine m_;
  RunOptions opts_;
  std::vector<Cursor> cursors_;
};

}  // namespace

RunResult run_trace(const RunConfig& cfg, const Trace& trace, const RunOptions& opts) {
  return Runner(cfg, trace, opts).run();
}

}  // namespace mtsim
