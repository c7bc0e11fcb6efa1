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

#include "mtsim/report.hpp"

#include <json.hpp>

namespace mtsim {

namespace {

using nlohmann::ordered_json;

ordered_json level(const LevelStats& s) {
  return {{"lookups", s.lookups}, {"hits", s.hits},         {"misses", s.misses},
          {"fills", s.fills},     {"evictions", s.evictions}, {"hit_rate", s.hit_rate()}};
}

ordered_json filter(const FilterStats& s) {
  ordered_json j = level(s);
  j["uncommitted_drops"] = s.uncommitted_drops;
  j["flushes"] = s.flushes;
  j["snoop_invalidations"] = s.snoop_invalidations;
  j["blocked_fills"] = s.blocked_fills;
  return j;
}

ordered_json stats(const StatsSnapshot& s) {
  ordered_json j;
  j["ticks"] = s.ticks;
  j["l0d"] = filter(s.l0d);
  j["l0i"] = filter(s.l0i);
  j["l1d"] = level(s.l1d);
  j["l1i"] = level(s.l1i);
  j["l2"] = level(s.l2);
  const BusStats& b = s.bus;
  j["bus"] = {{"transactions", b.transactions},
              {"gets", b.gets},
              {"getx", b.getx},
              {"nacks", b.nacks},
              {"downgrades", b.downgrades},
              {"invalidations", b.invalidations},
              {"filter_broadcasts", b.filter_broadcasts},
              {"filter_invalidations", b.filter_invalidations},
              {"se_launched", b.se_launched},
              {"se_upgrades", b.se_upgrades},
              {"se_aborted", b.se_aborted},
              {"writebacks", b.writebacks},
              {"write_throughs", b.write_throughs},
              {"commit_refetches", b.commit_refetches}};
  const PrefetchStats& p = s.prefetch;
  j["prefetch"] = {{"notifications", p.notifications}, {"dropped_l1", p.dropped_l1}, {"issued", p.issued},
                   {"useful", p.useful},               {"suppressed", p.suppressed}, {"redundant", p.redundant},
                   {"queue_overflow", p.queue_overflow}};
  const TlbStats& t = s.tlb;
  j["tlb"] = {{"filter_hits", t.filter_hits}, {"main_hits", t.main_hits},   {"walks", t.walks},
              {"retranslations", t.retranslations}, {"promotions", t.promotions}, {"faults", t.faults}};
  ordered_json threads = ordered_json::object();
  for (const auto& [name, ts] : s.threads) {
    threads[name] = {{"issued", ts.issued},   {"committed", ts.committed},
                     {"squashed", ts.squashed}, {"forwarded", ts.forwarded},
                     {"nacked", ts.nacked},   {"blocked", ts.blocked},
                     {"domain_switches", ts.domain_switches}, {"l0d", filter(ts.l0d)},
                     {"l0i", filter(ts.l0i)}};
  }
  j["threads"] = threads;
  j["invariant_checks"] = s.invariant_checks;
  return j;
}

}  // namespace

std::string stats_json(const StatsSnapshot& s) { return stats(s).dump(2) + "\n"; }

std::string run_report_json(const RunResult& r, bool events) {
  ordered_json j = stats(r.stats);
  if (events) {
    ordered_json acc = ordered_json::array();
    for (const AccessLogEntry& e : r.accesses) {
      acc.push_back({{"tick", e.tick},
                     {"thread", to_string(e.thread)},
                     {"inst", e.inst},
                     {"kind", std::string(to_string(e.kind))},
                     {"vaddr", e.vaddr},
                     {"paddr", e.paddr},
                     {"level", std::string(to_string(e.level))},
                     {"level_latency", e.level_latency},
                     {"latency", e.latency},
                     {"retried", e.retried},
                     {"forwarded", e.forwarded}});
    }
    ordered_json coh = ordered_json::array();
    for (const CoherenceMsg& m : r.coherence) coh.push_back(m.format());
    j["events"] = {{"accesses", acc}, {"coherence", coh}};
  }
  return j.dump(2) + "\n";
}

}  // namespace mtsim
