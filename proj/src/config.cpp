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

#include "mtsim/config.hpp"

#include <charconv>
#include <functional>
#include <map>
#include <sstream>

namespace mtsim {

namespace {

bool is_pow2(std::uint64_t v) { return v != 0 && (v & (v - 1)) == 0; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::uint64_t parse_u64(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  int base = 10;
  if (v.size() > 2 && v[0] == '0' && (v[1] == 'x' || v[1] == 'X')) {
    v.remove_prefix(2);
    base = 16;
  }
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out, base);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw SimError(ErrorCode::ConfigError,
                   "bad integer '" + std::string(v) + "' for " + std::string(key));
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw SimError(ErrorCode::ConfigError,
                 "bad boolean '" + std::string(v) + "' for " + std::string(key));
}

struct Field {
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, std::string_view key, std::string_view)> set;
};

// Accessors over a member path.
#define MTSIM_UINT(expr)                                                           \
  Field {                                                                          \
    [](const RunConfig& c) { return std::to_string(c.expr); },                     \
        [](RunConfig& c, std::string_view k, std::string_view v) {                 \
          c.expr = static_cast<decltype(c.expr)>(parse_u64(k, v));                 \
        }                                                                          \
  }
#define MTSIM_BOOL(expr)                                                           \
  Field {                                                                          \
    [](const RunConfig& c) { return std::string(c.expr ? "true" : "false"); },    \
        [](RunConfig& c, std::string_view k, std::string_view v) {                 \
          c.expr = parse_bool(k, v);                                               \
        }                                                                          \
  }

const std::vector<std::pair<std::string, Field>>& field_table() {
  static const std::vector<std::pair<std::string, Field>> table = {
      {"system.cores", MTSIM_UINT(cores)},
      {"system.threads_per_core", MTSIM_UINT(threads_per_core)},
      {"system.seed", MTSIM_UINT(seed)},
      {"system.check_invariants", MTSIM_BOOL(check_invariants)},
      {"core.rob_entries", MTSIM_UINT(core.rob_entries)},
      {"core.lq_entries", MTSIM_UINT(core.lq_entries)},
      {"core.sq_entries", MTSIM_UINT(core.sq_entries)},
      {"l1i.size_bytes", MTSIM_UINT(caches.l1i.size_bytes)},
      {"l1i.ways", MTSIM_UINT(caches.l1i.ways)},
      {"l1i.hit_latency", MTSIM_UINT(caches.l1i.hit_latency)},
      {"l1i.mshrs", MTSIM_UINT(caches.l1i.mshrs)},
      {"l1d.size_bytes", MTSIM_UINT(caches.l1d.size_bytes)},
      {"l1d.ways", MTSIM_UINT(caches.l1d.ways)},
      {"l1d.hit_latency", MTSIM_UINT(caches.l1d.hit_latency)},
      {"l1d.mshrs", MTSIM_UINT(caches.l1d.mshrs)},
      {"l2.size_bytes", MTSIM_UINT(caches.l2.size_bytes)},
      {"l2.ways", MTSIM_UINT(caches.l2.ways)},
      {"l2.hit_latency", MTSIM_UINT(caches.l2.hit_latency)},
      {"l2.mshrs", MTSIM_UINT(caches.l2.mshrs)},
      {"memory.latency", MTSIM_UINT(caches.memory_latency)},
      {"filter.size_bytes", MTSIM_UINT(filter.size_bytes)},
      {"filter.ways", MTSIM_UINT(filter.ways)},
      {"filter.hit_latency", MTSIM_UINT(filter.hit_latency)},
      {"filter.mshrs", MTSIM_UINT(filter.mshrs)},
      {"tlb.main_entries", MTSIM_UINT(tlb.main_entries)},
      {"tlb.filter_entries", MTSIM_UINT(tlb.filter_entries)},
      {"prefetch.enabled", MTSIM_BOOL(prefetch.enabled)},
      {"prefetch.table_entries", MTSIM_UINT(prefetch.table_entries)},
      {"prefetch.queue_depth", MTSIM_UINT(prefetch.queue_depth)},
      {"flags.defense",
       Field{[](const RunConfig& c) { return std::string(to_string(c.flags.defense)); },
             [](RunConfig& c, std::string_view, std::string_view v) {
               c.flags.defense = parse_profile(v);
             }}},
      {"flags.parallel_l0_l1", MTSIM_BOOL(flags.parallel_l0_l1)},
      {"flags.clear_on_misspeculate", MTSIM_BOOL(flags.clear_on_misspeculate)},
      {"flags.block_uncommitted_eviction", MTSIM_BOOL(flags.block_uncommitted_eviction)},
      {"flags.check_permissions_before_fill", MTSIM_BOOL(flags.check_permissions_before_fill)},
  };
  return table;
}

#undef MTSIM_UINT
#undef MTSIM_BOOL

const Field& field(std::string_view key) {
  for (const auto& [k, f] : field_table()) {
    if (k == key) return f;
  }
  throw SimError(ErrorCode::ConfigError, "unknown config key '" + std::string(key) + "'");
}

}  // namespace

void CacheGeometry::validate(std::string_view name) const {
  const std::string n(name);
  if (ways == 0) throw SimError(ErrorCode::ConfigError, n + ": ways must be > 0");
  if (size_bytes == 0 || size_bytes % (std::uint64_t{ways} * kLineSize) != 0) {
    throw SimError(ErrorCode::ConfigError, n + ": size must be a multiple of ways*64");
  }
  if (!is_pow2(sets())) throw SimError(ErrorCode::ConfigError, n + ": set count must be a power of two");
  if (mshrs == 0) throw SimError(ErrorCode::ConfigError, n + ": mshrs must be > 0");
}

void FilterConfig::validate() const {
  geometry().validate("filter");
  // Index bits must come from the page offset so virtual and physical
  // indexing agree.
  if (geometry().sets() > (std::uint64_t{1} << kLinesPerPageBits)) {
    throw SimError(ErrorCode::ConfigError, "filter: more sets than lines per page");
  }
}

void RunConfig::validate() const {
  if (cores == 0 || cores > 64) throw SimError(ErrorCode::ConfigError, "cores must be in 1..64");
  if (threads_per_core == 0 || threads_per_core > 8) {
    throw SimError(ErrorCode::ConfigError, "threads_per_core must be in 1..8");
  }
  if (core.rob_entries == 0 || core.lq_entries == 0 || core.sq_entries == 0) {
    throw SimError(ErrorCode::ConfigError, "core queue sizes must be > 0");
  }
  caches.l1i.validate("l1i");
  caches.l1d.validate("l1d");
  caches.l2.validate("l2");
  filter.validate();
  if (tlb.main_entries == 0 || tlb.filter_entries == 0) {
    throw SimError(ErrorCode::ConfigError, "tlb sizes must be > 0");
  }
  if (prefetch.table_entries == 0 || prefetch.queue_depth == 0) {
    throw SimError(ErrorCode::ConfigError, "prefetcher sizes must be > 0");
  }
}

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> ks = [] {
    std::vector<std::string> out;
    for (const auto& [k, f] : field_table()) out.push_back(k);
    return out;
  }();
  return ks;
}

void RunConfig::set(std::string_view key, std::string_view value) {
  field(key).set(*this, key, trim(value));
}

std::string RunConfig::get(std::string_view key) const { return field(key).get(*this); }

std::string RunConfig::serialize() const {
  std::ostringstream os;
  for (const auto& [k, f] : field_table()) os << k << " = " << f.get(*this) << "\n";
  return os.str();
}

void RunConfig::apply_text(std::string_view text) {
  std::size_t lineno = 0;
  while (!text.empty()) {
    auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw SimError(ErrorCode::ConfigError, "line " + std::to_string(lineno) + ": expected key = value");
    }
    set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

RunConfig RunConfig::parse(std::string_view text) {
  RunConfig cfg;
  cfg.apply_text(text);
  return cfg;
}

void apply_override(RunConfig& cfg, std::string_view assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw SimError(ErrorCode::ConfigError, "override '" + std::string(assignment) + "' is not key=value");
  }
  cfg.set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

}  // namespace mtsim
