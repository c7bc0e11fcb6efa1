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

#include "mtsim/machine.hpp"
#include "mtsim/prefetch.hpp"

using namespace mtsim;

namespace {

constexpr ThreadId kT0{0, 0};
constexpr ThreadId kC1{1, 0};

PrefetchNotification note(LineNum l, Level lv = Level::Memory) { return {l, lv, 1, kT0}; }

InstId load(Machine& m, ThreadId t, Addr a) { return m.issue(t, MemOp{MemKind::Load, a, 0, 0}); }

RunConfig cfg() {
  RunConfig c;
  c.cores = 2;
  return c;
}

}  // namespace

TEST(Prefetch, ThreeStridedCommitsProposeFourth) {
  StridePrefetcher p(PrefetchConfig{});
  p.notify(note(0x1000));
  p.notify(note(0x1001, Level::L2));
  EXPECT_FALSE(p.has_queued());
  p.notify(note(0x1002));
  ASSERT_TRUE(p.has_queued());
  EXPECT_EQ(p.pop(), 0x1003u);
  const auto table = p.table_snapshot();
  ASSERT_EQ(table.size(), 1u);
  EXPECT_EQ(table[0].stride, 1);
  EXPECT_EQ(table[0].confidence, 2u);
}

TEST(Prefetch, ConfidenceSaturatesAtThree) {
  StridePrefetcher p(PrefetchConfig{});
  for (LineNum l = 0; l < 10; ++l) p.train(0x2000 + 2 * l);
  EXPECT_EQ(p.table_snapshot().at(0).confidence, 3u);
  p.train(0x2000 + 21);
  EXPECT_EQ(p.table_snapshot().at(0).confidence, 1u);
}

TEST(Prefetch, NoCrossPagePrefetch) {
  StridePrefetcher p(PrefetchConfig{});
  p.train(0x103d);
  p.train(0x103e);
  EXPECT_FALSE(p.train(0x103f).has_value());
}

TEST(Prefetch, L1OriginNotificationsDropped) {
  StridePrefetcher p(PrefetchConfig{});
  for (LineNum l = 0; l < 4; ++l) p.notify(note(0x1000 + l, Level::L1));
  EXPECT_FALSE(p.has_queued());
  EXPECT_TRUE(p.table_snapshot().empty());
  EXPECT_TRUE(p.training_log().empty());
  EXPECT_EQ(p.stats().dropped_l1, 4u);
  EXPECT_EQ(p.stats().notifications, 4u);
}

TEST(Prefetch, DuplicateTargetsQueuedOnce) {
  StridePrefetcher p(PrefetchConfig{});
  for (LineNum l = 0; l < 3; ++l) p.notify(note(0x1000 + l));
  p.notify(note(0x1002));
  p.notify(note(0x1001));
  p.notify(note(0x1002));
  EXPECT_EQ(p.queue().size(), 1u);
}

TEST(Prefetch, QueueDropsOldestWhenFull) {
  PrefetchConfig c;
  c.queue_depth = 2;
  StridePrefetcher p(c);
  for (LineNum region = 0; region < 3; ++region) {
    for (LineNum l = 0; l < 3; ++l) p.notify(note(region * 64 + l));
  }
  EXPECT_EQ(p.queue().size(), 2u);
  EXPECT_EQ(p.queue().front(), 64u + 3);
  EXPECT_EQ(p.stats().queue_overflow, 1u);
}

TEST(Prefetch, CommittedStreamPrefetchesIntoL2Only) {
  Machine m(cfg());
  for (Addr i = 0; i < 3; ++i) m.commit(kT0, load(m, kT0, 0x300000 + i * kLineSize));
  m.drain();
  const LineNum target = line_of(0x300000) + 3;
  EXPECT_TRUE(m.hierarchy().l2().contains(target));
  EXPECT_FALSE(m.hierarchy().l1d(0).contains(target));
  EXPECT_EQ(m.stats().prefetch.issued, 1u);
  EXPECT_EQ(m.hierarchy().prefetch_issues(), std::vector<LineNum>{target});
}

TEST(Prefetch, SquashedAccessesLeaveTableUntrained) {
  Machine m(cfg());
  const InstId br = m.issue_branch(kT0);
  for (Addr i = 0; i < 4; ++i) load(m, kT0, 0x300000 + i * kLineSize);
  m.squash(kT0, br);
  m.commit_all(kT0);
  m.drain();
  EXPECT_TRUE(m.hierarchy().prefetcher().table_snapshot().empty());
  EXPECT_TRUE(m.hierarchy().prefetcher().training_log().empty());
  EXPECT_EQ(m.stats().prefetch.issued, 0u);
}

TEST(Prefetch, UnprotectedTrainsOnSpeculativeMisses) {
  RunConfig c = cfg();
  c.flags.defense = Profile::Unprotected;
  Machine m(c);
  const InstId br = m.issue_branch(kT0);
  for (Addr i = 0; i < 3; ++i) load(m, kT0, 0x300000 + i * kLineSize);
  m.squash(kT0, br);
  m.commit_all(kT0);
  m.drain();
  EXPECT_TRUE(m.hierarchy().l2().contains(line_of(0x300000) + 3));
}

TEST(Prefetch, PrefetchedLineServesLaterSpeculativeMiss) {
  Machine m(cfg());
  for (Addr i = 0; i < 3; ++i) m.commit(kT0, load(m, kT0, 0x300000 + i * kLineSize));
  m.drain();
  const InstId id = load(m, kT0, 0x300000 + 3 * kLineSize);
  const InstRecord* r = m.find(kT0, id);
  EXPECT_EQ(r->level, Level::L2);
  EXPECT_EQ(m.l0d(kT0).find_valid(line_of(0x300000) + 3)->origin, Level::L2);
  EXPECT_EQ(m.stats().prefetch.useful, 1u);
}

TEST(Prefetch, NeverDowngradesRemoteOwner) {
  Machine m(cfg());
  const Addr target = 0x300000 + 3 * kLineSize;
  m.commit(kC1, m.issue(kC1, MemOp{MemKind::Store, target, 1, 0}));
  m.drain();
  const auto downgrades = m.stats().bus.downgrades;
  for (Addr i = 0; i < 3; ++i) m.commit(kT0, load(m, kT0, 0x300000 + i * kLineSize));
  m.drain();
  EXPECT_EQ(m.hierarchy().l1d(1).state_of(line_of(target)), Mesi::M);
  EXPECT_EQ(m.stats().bus.downgrades, downgrades);
  EXPECT_EQ(m.stats().prefetch.suppressed, 1u);
  EXPECT_FALSE(m.hierarchy().l2().contains(line_of(target)));
}

TEST(Prefetch, TrainingStreamIsCommitStream) {
  Machine m(cfg());
  std::vector<LineNum> committed;
  for (Addr i = 0; i < 12; ++i) {
    const Addr a = 0x400000 + ((i * 7) % 12) * 0x1000 + (i % 5) * kLineSize;
    const InstId id = load(m, kT0, a);
    const InstId br = m.issue_branch(kT0);
    load(m, kT0, 0x800000 + i * kLineSize);
    m.squash(kT0, br);
    m.commit_all(kT0);
    (void)id;
    committed.push_back(line_of(a));
  }
  m.drain();
  std::vector<LineNum> seen;
  for (LineNum l : m.hierarchy().prefetcher().training_log()) {
    if (l >= line_of(0x400000) && l < line_of(0x800000)) seen.push_back(l);
  }
  EXPECT_EQ(seen, committed);
  for (LineNum l : m.hierarchy().prefetcher().training_log()) {
    EXPECT_FALSE(l >= line_of(0x800000) && l < line_of(0x800000) + 12);
  }
}
