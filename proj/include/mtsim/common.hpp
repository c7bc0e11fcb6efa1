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

#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mtsim {

using Tick = std::uint64_t;
using InstId = std::uint64_t;
using Addr = std::uint64_t;
using LineNum = std::uint64_t;  // byte address >> kLineBits
using PageNum = std::uint64_t;  // byte address >> kPageBits

inline constexpr unsigned kLineBits = 6;
inline constexpr Addr kLineSize = Addr{1} << kLineBits;
inline constexpr unsigned kPageBits = 12;
inline constexpr unsigned kLinesPerPageBits = kPageBits - kLineBits;

constexpr LineNum line_of(Addr a) { return a >> kLineBits; }
constexpr PageNum page_of(Addr a) { return a >> kPageBits; }
constexpr Addr line_base(LineNum l) { return l << kLineBits; }

enum class ErrorCode {
  PastTick,
  CapacityFull,
  OutOfOrderCommit,
  InFlightRemains,
  UnknownInstruction,
  SpeculativeFillForbidden,
  SpeculativeExclusiveForbidden,
  PageFault,
  PermissionFault,
  InvariantViolation,
  ScriptError,
  ParseError,
  ConfigError,
  BadParams,
};

std::string_view to_string(ErrorCode code);

class SimError : public std::runtime_error {
 public:
  SimError(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

struct ThreadId {
  unsigned core = 0;
  unsigned thread = 0;

  auto operator<=>(const ThreadId&) const = default;
};

std::string to_string(ThreadId t);

// A protection domain. Changing either field on a thread is a domain switch.
struct DomainId {
  unsigned process = 0;
  unsigned sandbox = 0;

  auto operator<=>(const DomainId&) const = default;
};

std::string to_string(DomainId d);

// Levels a request can be served from. Filter-cache origin tags only ever
// hold L1, L2 or Memory.
enum class Level : std::uint8_t { L0, L1, L2, Memory };

std::string_view to_string(Level l);

enum class MemKind : std::uint8_t { Load, Store, IFetch };

std::string_view to_string(MemKind k);

enum class Mesi : std::uint8_t { I, S, E, M };

std::string_view to_string(Mesi s);

enum class Profile : std::uint8_t { Unprotected, MuonTrap, MuonTrapClear };

std::string_view to_string(Profile p);
Profile parse_profile(std::string_view s);

enum class SwitchCause : std::uint8_t { ContextSwitch, Syscall, SandboxEnter };

std::string_view to_string(SwitchCause c);
SwitchCause parse_switch_cause(std::string_view s);

// A line-granular address carrying both the physical and the virtual line.
// Both share the low kLinesPerPageBits bits (the page offset), which is what
// filter caches index with.
struct LineAddr {
  LineNum pline = 0;
  LineNum vline = 0;

  static LineAddr from(Addr vaddr, Addr paddr) { return {line_of(paddr), line_of(vaddr)}; }
  static LineAddr physical(Addr paddr) { return {line_of(paddr), line_of(paddr)}; }

  bool operator==(const LineAddr&) const = default;
};

}  // namespace mtsim
