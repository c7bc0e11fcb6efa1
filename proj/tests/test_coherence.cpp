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

#include <gtest/gtest.h>

#include <random>

#include "mtsim/coherence.hpp"
#include "mtsim/machine.hpp"

using namespace mtsim;

namespace {

constexpr ThreadId kT0{0, 0};
constexpr ThreadId kC1{1, 0};
constexpr ThreadId kC2{2, 0};
constexpr Addr kD = 0x100000;
constexpr LineNum kLine = kD >> kLineBits;

RunConfig cfg(unsigned cores = 2) {
  RunConfig c;
  c.cores = cores;
  c.threads_per_core = 1;
  return c;
}

InstId load(Machine& m, ThreadId t, Addr a) { return m.issue(t, MemOp{MemKind::Load, a, 0, 0}); }
InstId store(Machine& m, ThreadId t, Addr a, std::uint64_t v) { return m.issue(t, MemOp{MemKind::Store, a, v, 0}); }

}  // namespace

TEST(Coherence, SpeculativeReadOfRemoteModifiedIsNacked) {
  Hierarchy h(cfg());
  h.getx(kC1, kLine, 5, false, 0, 1);
  ASSERT_EQ(h.l1d(1).state_of(kLine), Mesi::M);
  const Grant g = h.gets(kT0, kLine, true, false, 0, 1);
  EXPECT_TRUE(g.nack);
  EXPECT_EQ(g.latency, h.path_latency(Level::L2, false));
  EXPECT_EQ(h.l1d(1).state_of(kLine), Mesi::M);
  EXPECT_EQ(h.bus().nacks, 1u);
  EXPECT_EQ(h.bus().downgrades, 0u);
}

TEST(Coherence, SpeculativeReadOfOwnExclusiveIsGranted) {
  Hierarchy h(cfg());
  h.l1d(0).fill(kLine, Mesi::E, 0, false, FillSource::Coherence);
  const Grant g = h.gets(kT0, kLine, true, false, 0, 1);
  EXPECT_FALSE(g.nack);
  EXPECT_EQ(g.origin, Level::L1);
  EXPECT_EQ(h.l1d(0).state_of(kLine), Mesi::E);
}

TEST(Coherence, MemoryOnlyLineIsSeEligible) {
  Hierarchy h(cfg());
  const Grant g = h.gets(kT0, kLine, true, false, 0, 1);
  EXPECT_FALSE(g.nack);
  EXPECT_EQ(g.origin, Level::Memory);
  EXPECT_TRUE(g.se_eligible);
  EXPECT_EQ(g.latency, 103u);
  EXPECT_FALSE(h.l1d(0).contains(kLine));
  EXPECT_FALSE(h.l2().contains(kLine));
}

TEST(Coherence, NonSpeculativeReadDowngradesWithWriteback) {
  Hierarchy h(cfg());
  h.getx(kC1, kLine, 5, false, 0, 1);
  const Grant g = h.gets(kT0, kLine, false, false, 0, 1);
  EXPECT_FALSE(g.nack);
  EXPECT_EQ(g.data, 5u);
  EXPECT_EQ(h.l1d(1).state_of(kLine), Mesi::S);
  EXPECT_TRUE(h.l2().contains(kLine));
  EXPECT_EQ(h.bus().writebacks, 1u);
}

TEST(Coherence, NackedLoadSucceedsAtHead) {
  Machine m(cfg());
  m.commit(kC1, store(m, kC1, kD, 5));
  const InstId id = load(m, kT0, kD);
  EXPECT_EQ(m.find(kT0, id)->pending, Pending::Nacked);
  const auto r = m.commit(kT0, id);
  EXPECT_EQ(r.value, 5u);
  EXPECT_EQ(m.hierarchy().l1d(1).state_of(kLine), Mesi::S);
  EXPECT_EQ(m.hierarchy().l1d(0).state_of(kLine), Mesi::S);
  EXPECT_GE(m.stats().bus.writebacks, 1u);
  m.audit();
}

TEST(Coherence, TwoNackedCoresBothProgress) {
  Machine m(cfg(3));
  m.commit(kC2, store(m, kC2, kD, 9));
  const InstId a = load(m, kT0, kD);
  const InstId b = load(m, kC1, kD);
  EXPECT_EQ(m.find(kT0, a)->pending, Pending::Nacked);
  EXPECT_EQ(m.find(kC1, b)->pending, Pending::Nacked);
  EXPECT_EQ(m.commit(kT0, a).value, 9u);
  EXPECT_EQ(m.commit(kC1, b).value, 9u);
  m.drain();
  EXPECT_EQ(m.hierarchy().l1d(0).state_of(kLine), Mesi::S);
  EXPECT_EQ(m.hierarchy().l1d(1).state_of(kLine), Mesi::S);
  m.audit();
}

TEST(Coherence, StoreInvalidatesSharedFilterCopies) {
  Machine m(cfg(3));
  m.commit(kT0, load(m, kT0, kD));
  m.drain();
  m.commit(kC1, load(m, kC1, kD));
  m.drain();
  ASSERT_TRUE(m.l0d(kT0).snoop(kLine));
  ASSERT_TRUE(m.l0d(kC1).snoop(kLine));
  const auto before = m.stats().bus;
  m.commit(kC2, store(m, kC2, kD, 1));
  EXPECT_FALSE(m.l0d(kT0).snoop(kLine));
  EXPECT_FALSE(m.l0d(kC1).snoop(kLine));
  EXPECT_EQ(m.hierarchy().l1d(2).state_of(kLine), Mesi::M);
  EXPECT_EQ(m.hierarchy().l1d(0).state_of(kLine), Mesi::I);
  EXPECT_EQ(m.stats().bus.filter_broadcasts, before.filter_broadcasts + 1);
  EXPECT_EQ(m.stats().bus.filter_invalidations, before.filter_invalidations + 2);
}

TEST(Coherence, StoreToOwnExclusiveIsSilent) {
  Machine m(cfg());
  m.commit(kT0, load(m, kT0, kD));
  m.drain();
  ASSERT_EQ(m.hierarchy().l1d(0).state_of(kLine), Mesi::E);
  const auto before = m.stats().bus;
  m.commit(kT0, store(m, kT0, kD, 4));
  EXPECT_EQ(m.hierarchy().l1d(0).state_of(kLine), Mesi::M);
  EXPECT_EQ(m.stats().bus.filter_broadcasts, before.filter_broadcasts);
  EXPECT_EQ(m.stats().bus.transactions, before.transactions);
}

TEST(Coherence, SpeculativeExclusiveForbidden) {
  Hierarchy h(cfg());
  try {
    h.getx(kT0, kLine, 1, true, 0, 1);
    FAIL();
  } catch (const SimError& e) {
    EXPECT_EQ(e.code(), ErrorCode::SpeculativeExclusiveForbidden);
  }
}

TEST(Coherence, SeUpgradeInvalidatesLaterFilterCopies) {
  Machine m(cfg());
  m.commit(kT0, load(m, kT0, kD + 0x800));
  m.commit(kC1, load(m, kC1, kD + 0x800));
  m.drain();
  m.commit(kT0, load(m, kT0, kD));
  ASSERT_EQ(m.hierarchy().l1d(0).state_of(kLine), Mesi::S);
  load(m, kC1, kD);
  ASSERT_TRUE(m.l0d(kC1).snoop(kLine));
  m.drain();
  EXPECT_EQ(m.hierarchy().l1d(0).state_of(kLine), Mesi::E);
  EXPECT_FALSE(m.l0d(kC1).snoop(kLine));
  m.audit();
}

TEST(Coherence, SeUpgradeAbortsAfterRemoteWrite) {
  Machine m(cfg());
  m.commit(kT0, load(m, kT0, kD + 0x800));
  m.commit(kC1, load(m, kC1, kD + 0x800));
  m.drain();
  const auto aborted = m.stats().bus.se_aborted;
  const InstId st = store(m, kC1, kD, 6);
  const InstId ld = load(m, kT0, kD);
  m.advance(200);
  m.commit(kT0, ld);
  ASSERT_EQ(m.hierarchy().l1d(0).state_of(kLine), Mesi::S);
  m.commit(kC1, st);
  m.drain();
  EXPECT_EQ(m.stats().bus.se_aborted, aborted + 1);
  EXPECT_NE(m.hierarchy().l1d(0).state_of(kLine), Mesi::E);
  EXPECT_EQ(m.hierarchy().l1d(1).state_of(kLine), Mesi::M);
  EXPECT_EQ(m.commit(kT0, load(m, kT0, kD)).value, 6u);
  m.audit();
}

TEST(Coherence, ForeignFilterCopyDoesNotChangeTiming) {
  auto latency = [](bool foreign) {
    Machine m(cfg());
    m.commit(kT0, load(m, kT0, kD + 0x800));
    m.commit(kC1, load(m, kC1, kD + 0x800));
    m.drain();
    if (foreign) {
      const InstId br = m.issue_branch(kC1);
      load(m, kC1, kD);
      m.squash(kC1, br);
      m.commit_all(kC1);
    }
    m.drain();
    m.advance(300);
    return m.commit(kT0, load(m, kT0, kD)).latency;
  };
  EXPECT_EQ(latency(false), latency(true));
}

TEST(Coherence, ExclusiveMessagesNeverSpeculative) {
  Machine m(cfg(3));
  m.set_coherence_logging(true);
  std::mt19937_64 rng(3);
  for (int i = 0; i < 300; ++i) {
    const ThreadId t{static_cast<unsigned>(rng() % 3), 0};
    const Addr a = kD + (rng() % 4) * kLineSize;
    if (rng() % 3 == 0) {
      store(m, t, a, i);
    } else {
      load(m, t, a);
    }
    if (m.in_flight(t).size() > 3) m.commit(t, m.in_flight(t).front().id);
    m.advance(rng() % 5);
  }
  for (unsigned c = 0; c < 3; ++c) m.commit_all({c, 0});
  m.drain();
  bool saw_nack = false;
  for (const CoherenceMsg& msg : m.hierarchy().log()) {
    if (msg.kind == MsgKind::GetX || msg.kind == MsgKind::Upgrade || msg.kind == MsgKind::SEUpgrade) {
      EXPECT_FALSE(msg.speculative) << msg.format();
    }
    if (msg.kind == MsgKind::Nack) {
      saw_nack = true;
      EXPECT_TRUE(msg.speculative) << msg.format();
    }
  }
  EXPECT_TRUE(saw_nack);
  m.audit();
}

TEST(Coherence, SquashedAccessesLeaveOtherFiltersAlone) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto run = [seed](bool with_spec) {
      Machine m(cfg(2));
      std::mt19937_64 rng(seed);
      for (int i = 0; i < 60; ++i) {
        const Addr a = kD + (rng() % 6) * kLineSize;
        const bool spec = rng() % 2 == 0;
        const bool st = rng() % 4 == 0;
        if (spec) {
          if (with_spec) {
            const InstId br = m.issue_branch(kC1);
            load(m, kC1, a);
            m.squash(kC1, br);
            m.commit_all(kC1);
          }
        } else if (st) {
          m.commit(kT0, store(m, kT0, a, i));
        } else {
          m.commit(kT0, load(m, kT0, a));
        }
        m.drain();
      }
      std::vector<std::pair<LineNum, bool>> l0;
      const FilterCache& f = m.l0d(kT0);
      for (std::size_t s = 0; s < f.capacity(); ++s) {
        if (f.valid(s)) l0.emplace_back(f.slot(s).ptag, f.slot(s).committed);
      }
      return std::make_pair(l0, m.nonspec_state());
    };
    EXPECT_EQ(run(false), run(true)) << "seed " << seed;
  }
}
