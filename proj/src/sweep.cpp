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

#include "mtsim/sweep.hpp"

#include <algorithm>
#include <cstdio>
#include <future>

namespace mtsim {

std::string_view to_string(SweepAxis a) { return a == SweepAxis::L0Size ? "l0_size" : "l0_ways"; }

SweepAxis parse_sweep_axis(std::string_view s) {
  if (s == "l0_size") return SweepAxis::L0Size;
  if (s == "l0_ways") return SweepAxis::L0Ways;
  throw SimError(ErrorCode::BadParams, "unknown sweep axis '" + std::string(s) + "'");
}

std::vector<SweepPoint> sweep(const RunConfig& base, SweepAxis axis, const std::vector<std::uint64_t>& values,
                              const Trace& trace) {
  if (values.empty()) throw SimError(ErrorCode::BadParams, "sweep needs at least one value");
  if (std::adjacent_find(values.begin(), values.end(), std::greater_equal<>()) != values.end()) {
    throw SimError(ErrorCode::BadParams, "sweep values must be strictly ascending");
  }
  std::vector<RunConfig> cfgs;
  for (std::uint64_t v : values) {
    RunConfig c = base;
    if (axis == SweepAxis::L0Size) {
      c.filter.size_bytes = v;
      c.filter.ways = static_cast<unsigned>(std::clamp<std::uint64_t>(v / kLineSize, 1, c.filter.ways));
    } else {
      c.filter.ways = static_cast<unsigned>(v);
    }
    c.validate();
    cfgs.push_back(c);
  }
  std::vector<std::future<StatsSnapshot>> jobs;
  for (const RunConfig& c : cfgs) {
    jobs.push_back(std::async(std::launch::async, [&c, &trace] { return run_trace(c, trace).stats; }));
  }
  std::vector<SweepPoint> points;
  for (std::size_t i = 0; i < jobs.size(); ++i) points.push_back({values[i], jobs[i].get()});
  return points;
}

std::string sweep_csv(SweepAxis axis, const std::vector<SweepPoint>& points) {
  std::string out = "axis,value,ticks,l0d_hit_rate,l1d_hit_rate,l2_hit_rate,committed,squashed\n";
  for (const SweepPoint& p : points) {
    std::uint64_t committed = 0;
    std::uint64_t squashed = 0;
    for (const auto& [name, t] : p.stats.threads) {
      committed += t.committed;
      squashed += t.squashed;
    }
    char buf[256];
    std::snprintf(buf, sizeof buf, "%s,%llu,%llu,%.6f,%.6f,%.6f,%llu,%llu\n", std::string(to_string(axis)).c_str(),
                  static_cast<unsigned long long>(p.value), static_cast<unsigned long long>(p.stats.ticks),
                  p.stats.l0d.hit_rate(), p.stats.l1d.hit_rate(), p.stats.l2.hit_rate(),
                  static_cast<unsigned long long>(committed), static_cast<unsigned long long>(squashed));
    out += buf;
  }
  return out;
}

}  // namespace mtsim
