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
#include <deque>
#include <optional>
#include <vector>

#include "mtsim/common.hpp"
#include "mtsim/config.hpp"
#include "mtsim/stats.hpp"

namespace mtsim {

struct PrefetchNotification {
  LineNum line = 0;  // physical
  Level level = Level::L2;
  InstId inst = 0;
  ThreadId thread;
};

// Per-region stride detector. Confidence is a saturating 2-bit counter; a
// prefetch is proposed once it reaches 2.
struct StrideEntry {
  std::uint64_t region = 0;  // 4KiB physical region
  LineNum last = 0;
  std::int64_t stride = 0;
  unsigned confidence = 0;
  std::uint64_t lru = 0;

  bool operator==(const StrideEntry& o) const {
    return region == o.region && last == o.last && stride == o.stride && confidence == o.confidence;
  }
};

// Stride prefetcher attached to the shared L2. It only learns from what it
// is told through notify(); whoever calls it decides which access stream it
// sees.
class StridePrefetcher {
 public:
  static constexpr unsigned kIssueThreshold = 2;

  explicit StridePrefetcher(const PrefetchConfig& cfg);

  // Drops notifications aimed at a level without a prefetcher (L1 here).
  void notify(const PrefetchNotification& n);

  // Training step on its own; returns the proposed target, if any.
  std::optional<LineNum> train(LineNum line);

  bool has_queued() const { return !queue_.empty(); }
  std::optional<LineNum> pop();
  bool queued(LineNum line) const;

  const std::vector<LineNum>& training_log() const { return log_; }
  std::vector<StrideEntry> table_snapshot() const;  // ordered by region
  const std::deque<LineNum>& queue() const { return queue_; }

  PrefetchStats& stats() { return stats_; }
  const PrefetchStats& stats() const { return stats_; }

 private:
  PrefetchConfig cfg_;
  std::vector<StrideEntry> table_;
  std::deque<LineNum> queue_;
  std::vector<LineNum> log_;
  std::uint64_t clock_ = 0;
  PrefetchStats stats_;
};

}  // namespace mtsim
