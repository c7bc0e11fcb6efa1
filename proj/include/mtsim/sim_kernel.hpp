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
#include <optional>
#include <utility>

#include "mtsim/common.hpp"

namespace mtsim {

// Deterministic discrete-event queue with a single global clock.
//
// Events are plain values (no closures), so a queue and everything that owns
// one stays copyable. Events with the same fire tick dispatch in insertion
// order. The clock never moves backwards.
template <typename Payload>
class EventQueue {
 public:
  struct Handle {
    Tick fire_at = 0;
    std::uint64_t seq = 0;
  };

  Tick now() const { return now_; }
  bool empty() const { return queue_.empty(); }
  std::size_t pending() const { return queue_.size(); }
  std::uint64_t dispatched() const { return dispatched_; }

  std::optional<Tick> next_fire() const {
    if (queue_.empty()) return std::nullopt;
    return queue_.begin()->first.first;
  }

  Handle schedule(Tick fire_at, Payload payload) {
    if (fire_at < now_) {
      throw SimError(ErrorCode::PastTick, "event at " + std::to_string(fire_at) +
                                              " scheduled at tick " + std::to_string(now_));
    }
    Handle h{fire_at, next_seq_++};
    queue_.emplace(Key{h.fire_at, h.seq}, std::move(payload));
    return h;
  }

  // Returns false if the event already fired or was cancelled.
  bool cancel(Handle h) { return queue_.erase(Key{h.fire_at, h.seq}) > 0; }

  bool contains(Handle h) const { return queue_.count(Key{h.fire_at, h.seq}) > 0; }

  // Dispatches the earliest event, if any. dispatch(payload) may schedule more.
  template <typename Dispatch>
  bool step(Dispatch&& dispatch) {
    if (queue_.empty()) return false;
    auto it = queue_.begin();
    now_ = it->first.first;
    Payload p = std::move(it->second);
    queue_.erase(it);
    ++dispatched_;
    dispatch(p);
    return true;
  }

  // Dispatches every event with fire_at <= t, including ones scheduled while
  // dispatching, then sets the clock to t.
  template <typename Dispatch>
  Tick run_until(Tick t, Dispatch&& dispatch) {
    if (t < now_) throw SimError(ErrorCode::PastTick, "run_until into the past");
    while (!queue_.empty() && queue_.begin()->first.first <= t) step(dispatch);
    now_ = t;
    return now_;
  }

  // Dispatches until the queue is empty. The clock stops at the last event.
  template <typename Dispatch>
  Tick run_all(Dispatch&& dispatch) {
    while (step(dispatch)) {
    }
    return now_;
  }

 private:
  using Key = std::pair<Tick, std::uint64_t>;

  std::map<Key, Payload> queue_;
  Tick now_ = 0;
  std::uint64_t next_seq_ = 0;
  std::uint64_t dispatched_ = 0;
};

}  // namespace mtsim
