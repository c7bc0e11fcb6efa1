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
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mtsim/common.hpp"
#include "mtsim/config.hpp"
#include "mtsim/machine.hpp"

namespace mtsim {

enum class Verdict : std::uint8_t { Leaks, Sealed };

std::string_view to_string(Verdict v);

struct Probe {
  std::string label;
  Tick latency = 0;

  bool operator==(const Probe&) const = default;
};

// Latencies of the attacker's committed probe accesses, in order.
using ObservationTrace = std::vector<Probe>;

struct ScenarioOptions {
  bool block_uncommitted_eviction = false;
  unsigned filter_tlb_entries = 8;
};

enum class Role : std::uint8_t { Attacker, Victim };

struct Actor {
  Role role = Role::Attacker;
  ThreadId thread;
  DomainId domain;
};

class Rig;

struct Scenario {
  std::string name;
  std::string summary;
  std::vector<Actor> actors;
  // Adjusts the machine for the scenario. Runs after the profile is applied.
  std::function<void(RunConfig&, Profile)> configure;
  // Drives the machine. The secret may only change what the victim does
  // speculatively before a squash.
  std::function<void(Rig&, int secret)> script;
  std::function<Verdict(Profile, const ScenarioOptions&)> expected;
};

const std::vector<Scenario>& scenario_catalog();
const Scenario& find_scenario(std::string_view name);

// Script-facing wrapper over a Machine.
class Rig {
 public:
  Rig(const RunConfig& cfg, Profile profile);

  Machine& machine() { return m_; }
  Profile profile() const { return profile_; }
  const ObservationTrace& observations() const { return obs_; }

  // A committed access; returns its latency.
  Tick access(ThreadId t, MemKind k, Addr vaddr, std::uint64_t value = 0);
  Tick load(ThreadId t, Addr vaddr) { return access(t, MemKind::Load, vaddr); }

  // Lets all outstanding work finish, then records a committed access.
  void probe(const std::string& label, ThreadId t, MemKind k, Addr vaddr, std::uint64_t value = 0);
  void observe(const std::string& label, Tick latency);

  // Runs body under a branch that is then squashed and committed, along with
  // anything older.
  void speculate(ThreadId t, const std::function<void()>& body);
  InstId spec_issue(ThreadId t, MemKind k, Addr vaddr);

  // Commits everything on t and switches it to domain d.
  void switch_to(ThreadId t, DomainId d, SwitchCause cause = SwitchCause::ContextSwitch);

  void settle();

 private:
  Machine m_;
  Profile profile_;
  ObservationTrace obs_;
};

RunConfig scenario_config(const Scenario& s, Profile profile, const ScenarioOptions& opts);

// Throws ScriptError naming the failing step.
ObservationTrace run_scenario(const Scenario& s, int secret, Profile profile, const ScenarioOptions& opts = {});

struct LeakVerdict {
  bool leaks = false;
  // Traces for secret 0 and secret 1 when they differ.
  std::optional<std::pair<ObservationTrace, ObservationTrace>> witness;
};

LeakVerdict leak_oracle(const Scenario& s, Profile profile, const ScenarioOptions& opts = {});

struct MatrixCell {
  std::string scenario;
  Profile profile = Profile::Unprotected;
  Verdict expected = Verdict::Leaks;
  Verdict verdict = Verdict::Leaks;
  ObservationTrace secret0;
  ObservationTrace secret1;

  bool matches() const { return expected == verdict; }
};

// Scenarios run in parallel; cells come back scenario-major in the order given.
std::vector<MatrixCell> attack_matrix(const std::vector<std::string>& scenarios, const std::vector<Profile>& profiles,
                                      const ScenarioOptions& opts = {});
std::string matrix_json(const std::vector<MatrixCell>& cells, const ScenarioOptions& opts);

}  // namespace mtsim
