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

#include "mtsim/tlb.hpp"

#include <algorithm>

namespace mtsim {

namespace {

// Page tables live in a reserved physical window well above any workload
// address: 1MiB per process.
constexpr Addr kPageTableBase = Addr{0x7f} << 40;
constexpr Addr kPageTableStride = Addr{1} << 20;
constexpr Addr kPageTableWindow = Addr{1} << 40;

}  // namespace

std::string perms_to_string(std::uint8_t perms) {
  std::string s;
  s += (perms & kPermRead) ? 'r' : '-';
  s += (perms & kPermWrite) ? 'w' : '-';
  s += (perms & kPermExec) ? 'x' : '-';
  return s;
}

std::uint8_t parse_perms(std::string_view s) {
  std::uint8_t p = 0;
  for (char c : s) {
    switch (c) {
      case 'r': p |= kPermRead; break;
      case 'w': p |= kPermWrite; break;
      case 'x': p |= kPermExec; break;
      case '-': break;
      default:
        throw SimError(ErrorCode::ParseError, "bad permission string '" + std::string(s) + "'");
    }
  }
  return p;
}

Tlb::Tlb(unsigned entries) : capacity_(entries) {
  if (entries == 0) throw SimError(ErrorCode::ConfigError, "TLB needs at least one entry");
  entries_.reserve(entries);
}

const TlbEntry* Tlb::lookup(PageNum vpage, DomainId domain, bool touch) {
  TlbEntry* e = find(vpage, domain);
  if (e != nullptr && touch) e->lru = ++clock_;
  return e;
}

const TlbEntry* Tlb::find(PageNum vpage, DomainId domain) const {
  for (const TlbEntry& e : entries_) {
    if (e.vpage == vpage && e.domain == domain) return &e;
  }
  return nullptr;
}

TlbEntry* Tlb::find(PageNum vpage, DomainId domain) {
  return const_cast<TlbEntry*>(std::as_const(*this).find(vpage, domain));
}

std::optional<TlbEntry> Tlb::insert(TlbEntry entry) {
  entry.lru = ++clock_;
  if (TlbEntry* e = find(entry.vpage, entry.domain)) {
    *e = entry;
    return std::nullopt;
  }
  if (entries_.size() < capacity_) {
    entries_.push_back(entry);
    return std::nullopt;
  }
  auto victim = std::min_element(entries_.begin(), entries_.end(),
                                 [](const TlbEntry& a, const TlbEntry& b) { return a.lru < b.lru; });
  TlbEntry evicted = *victim;
  *victim = entry;
  return evicted;
}

std::vector<Tlb::SnapEntry> Tlb::snapshot() const {
  std::vector<const TlbEntry*> order;
  for (const TlbEntry& e : entries_) order.push_back(&e);
  std::sort(order.begin(), order.end(), [](const TlbEntry* a, const TlbEntry* b) { return a->lru < b->lru; });
  std::vector<SnapEntry> out;
  for (const TlbEntry* e : order) out.push_back({e->vpage, e->ppage, e->domain, e->perms, e->committed});
  return out;
}

void PageTables::map(unsigned process, PageNum vpage, PageMapping m) { tables_[process][vpage] = m; }

std::optional<PageMapping> PageTables::resolve(DomainId domain, PageNum vpage) const {
  auto t = tables_.find(domain.process);
  if (t == tables_.end()) return PageMapping{vpage, kPermAll};
  auto e = t->second.find(vpage);
  if (e == t->second.end()) return std::nullopt;
  return e->second;
}

std::array<Addr, 2> PageTables::walk_addresses(DomainId domain, PageNum vpage) {
  // Root: 512 eight-byte entries indexed by vpage[17:9]. Leaf tables follow
  // the root page, one 4KiB table per root slot.
  const Addr root = kPageTableBase + Addr{domain.process} * kPageTableStride;
  const Addr root_slot = (vpage >> 9) & 0x1ff;
  const Addr leaf = root + ((root_slot + 1) << kPageBits);
  return {root + root_slot * 8, leaf + (vpage & 0x1ff) * 8};
}

bool PageTables::is_page_table_line(LineNum pline) {
  const Addr a = line_base(pline);
  return a >= kPageTableBase && a < kPageTableBase + kPageTableWindow;
}

}  // namespace mtsim
