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

#include "mtsim/config.hpp"
#include "mtsim/stats.hpp"
#include "mtsim/trace.hpp"

namespace mtsim {

enum class SweepAxis : std::uint8_t { L0Size, L0Ways };

std::string_view to_string(SweepAxis a);
SweepAxis parse_sweep_axis(std::string_view s);

struct SweepPoint {
  std::uint64_t value = 0;
  StatsSnapshot stats;
};

// Runs the trace once per value, in parallel, returning points in value
// order. Values must be strictly ascending. On the l0_size axis the
// associativity is capped at the number of lines.
std::vector<SweepPoint> sweep(const RunConfig& base, SweepAxis axis, const std::vector<std::uint64_t>& values,
                              const Trace& trace);

// Columns: axis,value,ticks,l0d_hit_rate,l1d_hit_rate,l2_hit_rate,committed,squashed
std::string sweep_csv(SweepAxis axis, const std::vector<SweepPoint>& points);

}  // namespace mtsim
