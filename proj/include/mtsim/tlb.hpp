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

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "mtsim/common.hpp"

namespace mtsim {

enum Perm : std::uint8_t { kPermRead = 1, kPermWrite = 2, kPermExec = 4, kPermAll = 7 };

std::string perms_to_string(std::uint8_t perms);
std::uint8_t parse_perms(std::string_view s);

struct TlbEntry {
  PageNum vpage = 0;
  PageNum ppage = 0;
  DomainId domain;
  std::uint8_t perms = kPermAll;
  bool committed = false;  // filter TLB only
  std::uint64_t lru = 0;
};

// Fully associative LRU TLB. Used both as a core's main (non-speculative)
// TLB and as a thread's filter TLB.
class Tlb {
 public:
  explicit Tlb(unsigned entries);

  unsigned capacity() const { return capacity_; }
  std::size_t size() const { return entries_.size(); }

  const TlbEntry* lookup(PageNum vpage, DomainId domain, bool touch);
  const TlbEntry* find(PageNum vpage, DomainId domain) const;
  TlbEntry* find(PageNum vpage, DomainId domain);

  // Inserts or refreshes an entry as MRU; returns the evicted one.
  std::optional<TlbEntry> insert(TlbEntry entry);
  void flush() { entries_.clear(); }

  struct SnapEntry {
    PageNum vpage;
    PageNum ppage;
    DomainId domain;
    std::uint8_t perms;
    bool committed;
    bool operator==(const SnapEntry&) const = default;
  };
  // Entries ordered LRU -> MRU.
  std::vector<SnapEntry> snapshot() const;

 private:
  unsigned capacity_;
  std::vector<TlbEntry> entries_;
  std::uint64_t clock_ = 0;
};

struct PageMapping {
  PageNum ppage = 0;
  std::uint8_t perms = kPermAll;
};

// Per-process two-level page tables. A process with no declared mapping is
// identity-mapped with full permissions; once any page of a process is
// mapped, unmapped pages of that process fault.
class PageTables {
 public:
  void map(unsigned process, PageNum vpage, PageMapping m);
  bool strict(unsigned process) const { return tables_.count(process) > 0; }
  std::optional<PageMapping> resolve(DomainId domain, PageNum vpage) const;

  // Physical addresses of the root and leaf entries read by a walk.
  static std::array<Addr, 2> walk_addresses(DomainId domain, PageNum vpage);
  static bool is_page_table_line(LineNum pline);

 private:
  std::map<unsigned, std::map<PageNum, PageMapping>> tables_;
};

}  // namespace mtsim
