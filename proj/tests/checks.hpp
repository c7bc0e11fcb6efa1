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

#include <algorithm>
#include <array>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "mtsim/machine.hpp"

namespace mtsim::checks {

struct Op {
  ThreadId t;
  MemKind kind = MemKind::Load;
  Addr a = 0;
  std::uint64_t value = 0;
  bool speculative = false;
};

// Lines drawn so that no filter-cache set ever sees more distinct lines than
// it has ways, page-table lines included.
inline std::vector<Addr> purity_pool(std::mt19937_64& rng, const RunConfig& cfg, Addr page_base, unsigned pages) {
  const FilterConfig& f = cfg.filter;
  const std::uint64_t sets = f.size_bytes / kLineSize / f.ways;
  std::map<std::uint64_t, unsigned> load;
  for (unsigned p = 0; p < pages; ++p) {
    for (Addr w : PageTables::walk_addresses({}, page_of(page_base) + p)) {
      const LineNum l = line_of(w);
      if (p == 0 || w != PageTables::walk_addresses({}, page_of(page_base) + p - 1)[0]) ++load[l % sets];
    }
  }
  std::vector<Addr> pool;
  for (int tries = 0; tries < 200 && pool.size() < 12; ++tries) {
    const Addr a = page_base + (rng() % (pages << kLinesPerPageBits)) * kLineSize;
    if (std::find(pool.begin(), pool.end(), a) != pool.end()) continue;
    unsigned& n = load[line_of(a) % sets];
    if (n >= f.ways) continue;
    ++n;
    pool.push_back(a);
  }
  return pool;
}

inline NonSpecState run_purity(const RunConfig& cfg, const std::vector<Op>& ops, bool with_spec) {
  Machine m(cfg);
  for (const Op& op : ops) {
    if (op.speculative) {
      const InstId br = m.issue_branch(op.t);
      if (with_spec) m.issue(op.t, MemOp{op.kind, op.a, op.value, 0});
      m.advance(op.value % 40);
      m.squash(op.t, br);
      m.commit_all(op.t);
    } else {
      m.commit(op.t, m.issue(op.t, MemOp{op.kind, op.a, op.value, 0}));
    }
    m.drain();
  }
  m.audit();
  return m.nonspec_state();
}

struct Oracle : MachineObserver {
  std::map<LineNum, std::uint64_t> memory;
  std::uint64_t checked = 0;
  std::vector<std::string> errors;

  void on_load_bind(ThreadId t, InstId id, LineNum l, std::uint64_t v, bool forwarded) override {
    if (forwarded) return;
    ++checked;
    const auto it = memory.find(l);
    const std::uint64_t want = it == memory.end() ? 0 : it->second;
    if (v != want && errors.size() < 5) {
      errors.push_back(to_string(t) + " inst " + std::to_string(id) + " line " + std::to_string(l) + " got " +
                       std::to_string(v) + " want " + std::to_string(want));
    }
  }
  void on_store_commit(ThreadId, InstId, LineNum l, std::uint64_t v) override { memory[l] = v; }
};

inline bool single_writer(const Machine& m, LineNum l) {
  unsigned owners = 0;
  unsigned holders = 0;
  for (unsigned c = 0; c < m.config().cores; ++c) {
    const Mesi s = m.hierarchy().l1d(c).state_of(l);
    if (s != Mesi::I) ++holders;
    if (s == Mesi::E || s == Mesi::M) ++owners;
  }
  return owners == 0 || (owners == 1 && holders == 1);
}

inline RunConfig small_config(unsigned cores) {
  RunConfig c;
  c.cores = cores;
  c.caches.l1d.size_bytes = 1024;
  c.caches.l1i.size_bytes = 1024;
  c.caches.l2.size_bytes = 8192;
  return c;
}


struct Explorer {
  static constexpr unsigned kWindow = 3;
  const Addr line = 0x6100'0000;

  struct Node {
    Machine m;
    Oracle o;
    std::array<unsigned, 2> issued{};
  };

  std::array<std::array<MemKind, kWindow>, 2> programs{};
  std::uint64_t leaves = 0;
  std::uint64_t failures = 0;
  std::string first_failure;

  void fail(const std::string& why) {
    if (failures++ == 0) first_failure = why;
  }

  void step(Node& n) {
    n.m.set_observer(&n.o);
    if (!single_writer(n.m, line_of(line))) fail("two writers");
    bool any = false;
    for (unsigned c = 0; c < 2; ++c) {
      const ThreadId t{c, 0};
      if (n.issued[c] < kWindow) {
        any = true;
        Node next = n;
        next.m.set_observer(&next.o);
        const MemKind k = programs[c][next.issued[c]];
        next.m.issue(t, MemOp{k, line, 100 * (c + 1) + next.issued[c], 0});
        ++next.issued[c];
        next.m.advance(1);
        step(next);
      }
      if (!n.m.in_flight(t).empty()) {
        any = true;
        Node next = n;
        next.m.set_observer(&next.o);
        next.m.commit(t, n.m.in_flight(t).front().id);
        next.m.advance(1);
        step(next);
      }
    }
    if (!any) {
      ++leaves;
      n.m.drain();
      if (!n.m.idle()) fail("events still pending after drain");
      n.m.audit();
      if (!single_writer(n.m, line_of(line))) fail("two writers at rest");
      if (!n.o.errors.empty()) fail(n.o.errors.front());
      if (n.m.stats().threads.at("0.0").committed != kWindow || n.m.stats().threads.at("1.0").committed != kWindow) {
        fail("lost commit");
      }
    }
  }
};

inline std::vector<Op> purity_script(std::uint64_t seed, const RunConfig& cfg) {
  std::mt19937_64 rng(seed);
  const std::vector<Addr> pool = purity_pool(rng, cfg, 0x4000'0000 + (seed % 7) * 0x10000, 2);
  std::vector<Op> ops;
  std::uint64_t value = 1;
  for (int i = 0; i < 80; ++i) {
    Op op;
    op.t = ThreadId{static_cast<unsigned>(rng() % cfg.cores), 0};
    op.a = pool[rng() % pool.size()];
    op.speculative = rng() % 2 == 0;
    const unsigned k = rng() % 8;
    op.kind = k == 0 || (op.speculative && k == 1) ? MemKind::Store : MemKind::Load;
    op.value = value++;
    ops.push_back(op);
  }
  return ops;
}

// Seeds in [1, seeds] whose non-speculative state depends on squashed work.
inline std::vector<std::uint64_t> purity_failures(const RunConfig& cfg, std::uint64_t seeds) {
  std::vector<std::uint64_t> bad;
  for (std::uint64_t seed = 1; seed <= seeds; ++seed) {
    const std::vector<Op> ops = purity_script(seed, cfg);
    if (!(run_purity(cfg, ops, false) == run_purity(cfg, ops, true))) bad.push_back(seed);
  }
  return bad;
}

struct OracleRun {
  std::uint64_t checked = 0;
  std::vector<std::string> errors;
};

// Random loads, stores, branches, squashes and commits over a few shared
// lines, checking every bound load value against a flat memory that is
// updated when stores commit.
inline OracleRun coherence_run(RunConfig cfg, std::uint64_t ops, std::uint64_t seed) {
  Machine m(cfg);
  Oracle o;
  m.set_observer(&o);
  std::mt19937_64 rng(seed);
  const auto threads = m.threads();
  std::uint64_t value = 1;
  std::map<std::pair<unsigned, unsigned>, std::vector<InstId>> branches;
  for (std::uint64_t i = 0; i < ops; ++i) {
    const ThreadId t = threads[rng() % threads.size()];
    const Addr a = 0x6000'0000 + (rng() % 8) * kLineSize;
    const unsigned pick = rng() % 16;
    const auto& rob = m.in_flight(t);
    auto& open = branches[{t.core, t.thread}];
    if (pick < 6 && rob.size() < 8) {
      m.issue(t, MemOp{MemKind::Load, a, 0, 0});
    } else if (pick < 9 && rob.size() < 8) {
      m.issue(t, MemOp{MemKind::Store, a, value++, 0});
    } else if (pick == 9 && rob.size() < 8) {
      open.push_back(m.issue_branch(t));
    } else if (pick == 10 && !open.empty()) {
      m.squash(t, open.back());
      open.clear();
    } else if (pick < 14 && !rob.empty()) {
      const InstId head = rob.front().id;
      open.erase(std::remove(open.begin(), open.end(), head), open.end());
      m.commit(t, head);
    } else {
      m.advance(rng() % 30);
    }
  }
  for (ThreadId t : threads) m.commit_all(t);
  m.drain();
  m.audit();
  for (const auto& [l, v] : o.memory) {
    if (m.peek(line_base(l)) != v) o.errors.push_back("final value of line " + std::to_string(l));
  }
  m.set_observer(nullptr);
  return {o.checked, o.errors};
}

struct ExploreResult {
  std::uint64_t leaves = 0;
  std::uint64_t failures = 0;
  std::string first_failure;
};

// Every interleaving of issue and commit steps for every pair of
// load/store programs of length kWindow, two cores, one line.
inline ExploreResult explore_all() {
  const RunConfig cfg = small_config(2);
  ExploreResult r;
  for (unsigned a = 0; a < (1u << Explorer::kWindow); ++a) {
    for (unsigned b = 0; b < (1u << Explorer::kWindow); ++b) {
      Explorer e;
      for (unsigned i = 0; i < Explorer::kWindow; ++i) {
        e.programs[0][i] = (a >> i) & 1 ? MemKind::Store : MemKind::Load;
        e.programs[1][i] = (b >> i) & 1 ? MemKind::Store : MemKind::Load;
      }
      Explorer::Node root{Machine(cfg), {}, {}};
      e.step(root);
      r.leaves += e.leaves;
      if (e.failures > 0 && r.failures == 0) {
        r.first_failure = "programs " + std::to_string(a) + "/" + std::to_string(b) + ": " + e.first_failure;
      }
      r.failures += e.failures;
    }
  }
  return r;
}

}  // namespace mtsim::checks
