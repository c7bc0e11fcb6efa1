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

#include "mtsim/common.hpp"

namespace mtsim {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::PastTick: return "PastTick";
    case ErrorCode::CapacityFull: return "CapacityFull";
    case ErrorCode::OutOfOrderCommit: return "OutOfOrderCommit";
    case ErrorCode::InFlightRemains: return "InFlightRemains";
    case ErrorCode::UnknownInstruction: return "UnknownInstruction";
    case ErrorCode::SpeculativeFillForbidden: return "SpeculativeFillForbidden";
    case ErrorCode::SpeculativeExclusiveForbidden: return "SpeculativeExclusiveForbidden";
    case ErrorCode::PageFault: return "PageFault";
    case ErrorCode::PermissionFault: return "PermissionFault";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
    case ErrorCode::ScriptError: return "ScriptError";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::BadParams: return "BadParams";
  }
  return "Unknown";
}

std::string to_string(ThreadId t) {
  return std::to_string(t.core) + "." + std::to_string(t.thread);
}

std::string to_string(DomainId d) {
  return std::to_string(d.process) + ":" + std::to_string(d.sandbox);
}

std::string_view to_string(Level l) {
  switch (l) {
    case Level::L0: return "L0";
    case Level::L1: return "L1";
    case Level::L2: return "L2";
    case Level::Memory: return "Memory";
  }
  return "?";
}

std::string_view to_string(MemKind k) {
  switch (k) {
    case MemKind::Load: return "LOAD";
    case MemKind::Store: return "STORE";
    case MemKind::IFetch: return "IFETCH";
  }
  return "?";
}

std::string_view to_string(Mesi s) {
  switch (s) {
    case Mesi::I: return "I";
    case Mesi::S: return "S";
    case Mesi::E: return "E";
    case Mesi::M: return "M";
  }
  return "?";
}

std::string_view to_string(Profile p) {
  switch (p) {
    case Profile::Unprotected: return "unprotected";
    case Profile::MuonTrap: return "muontrap";
    case Profile::MuonTrapClear: return "muontrap-clear";
  }
  return "?";
}

Profile parse_profile(std::string_view s) {
  if (s == "unprotected") return Profile::Unprotected;
  if (s == "muontrap") return Profile::MuonTrap;
  if (s == "muontrap-clear") return Profile::MuonTrapClear;
  throw SimError(ErrorCode::ConfigError, "unknown profile '" + std::string(s) + "'");
}

std::string_view to_string(SwitchCause c) {
  switch (c) {
    case SwitchCause::ContextSwitch: return "context";
    case SwitchCause::Syscall: return "syscall";
    case SwitchCause::SandboxEnter: return "sandbox";
  }
  return "?";
}

SwitchCause parse_switch_cause(std::string_view s) {
  if (s == "context") return SwitchCause::ContextSwitch;
  if (s == "syscall") return SwitchCause::Syscall;
  if (s == "sandbox") return SwitchCause::SandboxEnter;
  throw SimError(ErrorCode::ParseError, "unknown switch cause '" + std::string(s) + "'");
}

}  // namespace mtsim
