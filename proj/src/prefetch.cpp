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

#include "mtsim/prefetch.hpp"

#include <algorithm>

namespace mtsim {

StridePrefetcher::StridePrefetcher(const PrefetchConfig& cfg) : cfg_(cfg) {}

void StridePrefetcher::notify(const PrefetchNotification& n) {
  ++stats_.notifications;
  if (n.level == Level::L1 || n.level == Level::L0) {
    ++stats_.dropped_l1;
    return;
  }
  log_.push_back(n.line);
  auto target = train(n.line);
  if (!target) return;
  if (queued(*target)) {
    ++stats_.redundant;
    return;
  }
  if (queue_.size() >= cfg_.queue_depth) {
    queue_.pop_front();
    ++stats_.queue_overflow;
  }
  queue_.push_back(*target);
}

std::optional<LineNum> StridePrefetcher::train(LineNum line) {
  const std::uint64_t region = line >> kLinesPerPageBits;
  auto it = std::find_if(table_.begin(), table_.end(), [&](const StrideEntry& e) { return e.region == region; });
  if (it == table_.end()) {
    StrideEntry fresh{region, line, 0, 0, ++clock_};
    if (table_.size() < cfg_.table_entries) {
      table_.push_back(fresh);
    } else {
      auto victim = std::min_element(table_.begin(), table_.end(),
                                     [](const StrideEntry& a, const StrideEntry& b) { return a.lru < b.lru; });
      *victim = fresh;
    }
    return std::nullopt;
  }
  StrideEntry& e = *it;
  e.lru = ++clock_;
  const auto delta = static_cast<std::int64_t>(line) - static_cast<std::int64_t>(e.last);
  if (delta == 0) return std::nullopt;
  if (delta == e.stride) {
    e.confidence = std::min(e.confidence + 1, 3u);
  } else {
    e.stride = delta;
    e.confidence = 1;
  }
  e.last = line;
  if (e.confidence < kIssueThreshold) return std::nullopt;
  const auto target = static_cast<std::int64_t>(line) + e.stride;
  // No cross-page prefetching.
  if (target < 0 || (static_cast<LineNum>(target) >> kLinesPerPageBits) != region) return std::nullopt;
  return static_cast<LineNum>(target);
}

std::optional<LineNum> StridePrefetcher::pop() {
  if (queue_.empty()) return std::nullopt;
  LineNum l = queue_.front();
  queue_.pop_front();
  return l;
}

bool StridePrefetcher::queued(LineNum line) const {
  return std::find(queue_.begin(), queue_.end(), line) != queue_.end();
}

std::vector<StrideEntry> StridePrefetcher::table_snapshot() const {
  std::vector<StrideEntry> out = table_;
  std::sort(out.begin(), out.end(), [](const StrideEntry& a, const StrideEntry& b) { return a.region < b.region; });
  return out;
}

}  // namespace mtsim
