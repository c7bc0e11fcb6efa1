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

#include "mtsim/attack.hpp"

#include <future>
#include <json.hpp>

namespace mtsim {

std::string_view to_string(Verdict v) { return v == Verdict::Leaks ? "leaks" : "sealed"; }

Rig::Rig(const RunConfig& cfg, Profile profile) : m_(cfg), profile_(profile) {}

Tick Rig::access(ThreadId t, MemKind k, Addr vaddr, std::uint64_t value) {
  const InstId id = m_.issue(t, MemOp{k, vaddr, value, 0});
  return m_.commit(t, id).latency;
}

void Rig::probe(const std::string& label, ThreadId t, MemKind k, Addr vaddr, std::uint64_t value) {
  settle();
  obs_.push_back({label, access(t, k, vaddr, value)});
}

void Rig::observe(const std::string& label, Tick latency) { obs_.push_back({label, latency}); }

void Rig::speculate(ThreadId t, const std::function<void()>& body) {
  const InstId branch = m_.issue_branch(t);
  body();
  m_.squash(t, branch);
  m_.commit_through(t, branch);
}

InstId Rig::spec_issue(ThreadId t, MemKind k, Addr vaddr) { return m_.issue(t, MemOp{k, vaddr, 0, 0}); }

void Rig::switch_to(ThreadId t, DomainId d, SwitchCause cause) {
  m_.commit_all(t);
  m_.domain_switch(t, d, cause);
}

void Rig::settle() {
  m_.drain();
  m_.advance(256);
  m_.drain();
}

namespace {

constexpr ThreadId kT0{0, 0};
constexpr ThreadId kT1{0, 1};
constexpr ThreadId kC1{1, 0};
constexpr DomainId kVictim{1, 0};
constexpr DomainId kAttacker{2, 0};
constexpr Addr kL1dWay = 0x8000;  // addresses this far apart share an L1D set
constexpr Addr kL1iWay = 0x4000;

Verdict sealed_when_protected(Profile p, const ScenarioOptions&) {
  return p == Profile::Unprotected ? Verdict::Leaks : Verdict::Sealed;
}

void no_config(RunConfig&, Profile) {}

std::vector<Scenario> build_catalog() {
  std::vector<Scenario> c;

  c.push_back({"spectre_prime_probe",
               "victim speculatively evicts an attacker-primed L1D set",
               {{Role::Attacker, kT0, kAttacker}, {Role::Victim, kT0, kVictim}},
               no_config,
               [](Rig& r, int secret) {
                 const Addr p = 0x100000 + 300 * kLineSize;
                 r.switch_to(kT0, kAttacker);
                 r.load(kT0, p);
                 r.load(kT0, p + kL1dWay);
                 r.switch_to(kT0, kVictim);
                 r.speculate(kT0, [&] { r.spec_issue(kT0, MemKind::Load, p + 2 * kL1dWay + (secret ? 0 : 0x40)); });
                 r.switch_to(kT0, kAttacker);
                 r.probe("prime0", kT0, MemKind::Load, p);
                 r.probe("prime1", kT0, MemKind::Load, p + kL1dWay);
               },
               sealed_when_protected});

  c.push_back({"inclusion_policy",
               "a filter fill that also lands in L1 and L2 is visible from another core",
               {{Role::Victim, kT0, kVictim}, {Role::Attacker, kC1, kAttacker}},
               [](RunConfig& cfg, Profile p) {
                 if (p == Profile::Unprotected) cfg.flags.defense = Profile::MuonTrap;
               },
               [](Rig& r, int secret) {
                 if (r.profile() == Profile::Unprotected) {
                   r.machine().set_filter_fill_hook([](Hierarchy& h, ThreadId t, LineNum pline, std::uint64_t data,
                                                       bool instruction) { h.mirror_fill(t.core, instruction, pline, data); });
                 }
                 const Addr d = 0x200000 + 7 * kLineSize;
                 r.switch_to(kT0, kVictim);
                 r.switch_to(kC1, kAttacker);
                 r.speculate(kT0, [&] { r.spec_issue(kT0, MemKind::Load, secret ? d : d + kLineSize); });
                 r.probe("shared", kC1, MemKind::Load, d);
               },
               sealed_when_protected});

  c.push_back({"shared_data_coherence",
               "a speculative read downgrades the attacker's modified line",
               {{Role::Victim, kT0, kVictim}, {Role::Attacker, kC1, kAttacker}},
               no_config,
               [](Rig& r, int secret) {
                 const Addr d = 0x300000;
                 r.switch_to(kT0, kVictim);
                 r.switch_to(kC1, kAttacker);
                 r.access(kC1, MemKind::Store, d, 7);
                 r.speculate(kT0, [&] { r.spec_issue(kT0, MemKind::Load, secret ? d : d + kLineSize); });
                 r.probe("rewrite", kC1, MemKind::Store, d, 8);
               },
               sealed_when_protected});

  c.push_back({"filter_cache_coherency",
               "a speculative read takes exclusive ownership that the attacker must break",
               {{Role::Victim, kT0, kVictim}, {Role::Attacker, kC1, kAttacker}},
               no_config,
               [](Rig& r, int secret) {
                 const Addr d = 0x400000;
                 const Addr slow = 0x480000;
                 r.switch_to(kT0, kVictim);
                 r.switch_to(kC1, kAttacker);
                 r.speculate(kT0, [&] { r.spec_issue(kT0, MemKind::Load, secret ? d : d + kLineSize); });
                 r.settle();
                 Machine& m = r.machine();
                 const InstId older = m.issue(kC1, MemOp{MemKind::Load, slow, 0, 0});
                 const InstId target = m.issue(kC1, MemOp{MemKind::Load, d, 0, 0});
                 m.commit(kC1, older);
                 r.observe("shared", m.commit(kC1, target).latency);
               },
               sealed_when_protected});

  c.push_back({"instruction_cache",
               "victim speculatively fetches into an attacker-primed L1I set",
               {{Role::Attacker, kT0, kAttacker}, {Role::Victim, kT0, kVictim}},
               no_config,
               [](Rig& r, int secret) {
                 const Addr p = 0x500000 + 100 * kLineSize;
                 r.switch_to(kT0, kAttacker);
                 r.access(kT0, MemKind::IFetch, p);
                 r.access(kT0, MemKind::IFetch, p + kL1iWay);
                 r.switch_to(kT0, kVictim);
                 r.speculate(kT0, [&] { r.spec_issue(kT0, MemKind::IFetch, p + 2 * kL1iWay + (secret ? 0 : 0x40)); });
                 r.switch_to(kT0, kAttacker);
                 r.probe("prime0", kT0, MemKind::IFetch, p);
                 r.probe("prime1", kT0, MemKind::IFetch, p + kL1iWay);
               },
               sealed_when_protected});

  c.push_back({"prefetcher",
               "speculative strided loads train the prefetcher to fetch the next line",
               {{Role::Victim, kT0, kVictim}, {Role::Attacker, kC1, kAttacker}},
               no_config,
               [](Rig& r, int secret) {
                 const Addr x = 0x600000;
                 const Addr y = 0x680000;
                 const Addr base = secret ? x : y;
                 r.switch_to(kT0, kVictim);
                 r.switch_to(kC1, kAttacker);
                 r.speculate(kT0, [&] {
                   for (Addr i = 0; i < 3; ++i) r.spec_issue(kT0, MemKind::Load, base + i * kLineSize);
                 });
                 r.probe("next", kC1, MemKind::Load, x + 3 * kLineSize);
               },
               sealed_when_protected});

  c.push_back({"tlb_prime_probe",
               "a speculative translation evicts an attacker-primed TLB entry",
               {{Role::Attacker, kT0, kAttacker}, {Role::Victim, kT0, kVictim}},
               no_config,
               [](Rig& r, int secret) {
                 const Addr base = 0x1000000;
                 const unsigned pages = r.machine().config().tlb.main_entries;
                 r.switch_to(kT0, kAttacker);
                 for (unsigned i = 0; i < pages; ++i) r.load(kT0, base + Addr{i} * 4096 + 2 * kLineSize);
                 r.switch_to(kT0, kVictim);
                 r.speculate(kT0, [&] {
                   if (secret) r.spec_issue(kT0, MemKind::Load, 0x2000000);
                 });
                 r.switch_to(kT0, kAttacker);
                 r.probe("page0", kT0, MemKind::Load, base + 2 * kLineSize);
               },
               sealed_when_protected});

  c.push_back({"smt_multithreading",
               "a sibling thread speculatively evicts a primed L1D set",
               {{Role::Attacker, kT0, kAttacker}, {Role::Victim, kT1, kVictim}},
               no_config,
               [](Rig& r, int secret) {
                 const Addr p = 0x700000 + 200 * kLineSize;
                 r.switch_to(kT0, kAttacker);
                 r.switch_to(kT1, kVictim);
                 r.load(kT0, p);
                 r.load(kT0, p + kL1dWay);
                 r.speculate(kT1, [&] { r.spec_issue(kT1, MemKind::Load, p + 2 * kL1dWay + (secret ? 0 : 0x40)); });
                 r.probe("prime0", kT0, MemKind::Load, p);
                 r.probe("prime1", kT0, MemKind::Load, p + kL1dWay);
               },
               sealed_when_protected});

  c.push_back({"early_replacement",
               "a speculative fill evicts an older uncommitted line, which is then refetched into L2",
               {{Role::Victim, kT0, kVictim}, {Role::Attacker, kC1, kAttacker}},
               [](RunConfig& cfg, Profile) {
                 cfg.filter.size_bytes = kLineSize;
                 cfg.filter.ways = 1;
               },
               [](Rig& r, int secret) {
                 const Addr x = 0x800000 + 5 * kLineSize;
                 const Addr y = 0x880000 + 9 * kLineSize;
                 Machine& m = r.machine();
                 r.switch_to(kT0, kVictim);
                 r.switch_to(kC1, kAttacker);
                 for (Addr a : {x, y, x + kL1dWay, x + 2 * kL1dWay}) r.load(kT0, a + 0x100);
                 r.settle();
                 m.issue(kT0, MemOp{MemKind::Load, x, 0, 0});
                 r.speculate(kT0, [&] {
                   if (secret) r.spec_issue(kT0, MemKind::Load, y);
                 });
                 m.commit_all(kT0);
                 r.load(kT0, x + kL1dWay);
                 r.load(kT0, x + 2 * kL1dWay);
                 r.probe("older", kC1, MemKind::Load, x);
                 r.probe("speculative", kC1, MemKind::Load, y);
               },
               [](Profile p, const ScenarioOptions& o) {
                 if (p == Profile::MuonTrap && !o.block_uncommitted_eviction) return Verdict::Leaks;
                 return sealed_when_protected(p, o);
               }});

  c.push_back({"meltdown_style",
               "a load of a supervisor-only line forwards data to a dependent load before faulting",
               {{Role::Attacker, kT0, DomainId{3, 0}}},
               [](RunConfig& cfg, Profile p) {
                 if (p == Profile::Unprotected) cfg.flags.check_permissions_before_fill = false;
               },
               [](Rig& r, int secret) {
                 const DomainId a{3, 0};
                 const PageNum kernel = 0x900;
                 const PageNum probe = 0xa00;
                 Machine& m = r.machine();
                 m.page_tables().map(a.process, kernel, {kernel, 0});
                 m.page_tables().map(a.process, probe, {probe, kPermRead | kPermWrite});
                 const Addr k = kernel << kPageBits;
                 const Addr pb = probe << kPageBits;
                 m.poke(k, static_cast<std::uint64_t>(secret));
                 r.switch_to(kT0, a);
                 r.load(kT0, pb + 0x800);
                 r.speculate(kT0, [&] {
                   const InstId id = r.spec_issue(kT0, MemKind::Load, k);
                   const InstRecord* rec = m.find(kT0, id);
                   while (!rec->resolved) {
                     m.advance(1);
                     rec = m.find(kT0, id);
                   }
                   r.spec_issue(kT0, MemKind::Load, pb + (rec->value & 1) * kLineSize);
                 });
                 r.probe("probe1", kT0, MemKind::Load, pb + kLineSize);
               },
               sealed_when_protected});

  c.push_back({"shared_data_flush",
               "a line the victim touched speculatively is found resident after a context switch",
               {{Role::Attacker, kT0, kAttacker}, {Role::Victim, kT0, kVictim}},
               no_config,
               [](Rig& r, int secret) {
                 const Addr d = 0xb00000;
                 r.switch_to(kT0, kVictim);
                 r.speculate(kT0, [&] { r.spec_issue(kT0, MemKind::Load, secret ? d : d + kLineSize); });
                 r.switch_to(kT0, kAttacker);
                 r.probe("shared", kT0, MemKind::Load, d);
               },
               sealed_when_protected});

  c.push_back({"sandbox_within_process",
               "code inside a sandbox times a line its host touched speculatively",
               {{Role::Victim, kT0, DomainId{1, 0}}, {Role::Attacker, kT0, DomainId{1, 1}}},
               no_config,
               [](Rig& r, int secret) {
                 const Addr d = 0xc00000;
                 r.switch_to(kT0, DomainId{1, 0});
                 r.speculate(kT0, [&] { r.spec_issue(kT0, MemKind::Load, secret ? d : d + kLineSize); });
                 r.switch_to(kT0, DomainId{1, 1}, SwitchCause::SandboxEnter);
                 r.probe("shared", kT0, MemKind::Load, d);
               },
               sealed_when_protected});

  return c;
}

}  // namespace

const std::vector<Scenario>& scenario_catalog() {
  static const std::vector<Scenario> catalog = build_catalog();
  return catalog;
}

const Scenario& find_scenario(std::string_view name) {
  for (const Scenario& s : scenario_catalog()) {
    if (s.name == name) return s;
  }
  throw SimError(ErrorCode::BadParams, "unknown scenario '" + std::string(name) + "'");
}

RunConfig scenario_config(const Scenario& s, Profile profile, const ScenarioOptions& opts) {
  RunConfig cfg;
  cfg.cores = 2;
  cfg.threads_per_core = 2;
  cfg.flags.defense = profile;
  cfg.flags.block_uncommitted_eviction = opts.block_uncommitted_eviction;
  cfg.tlb.filter_entries = opts.filter_tlb_entries;
  s.configure(cfg, profile);
  cfg.validate();
  return cfg;
}

ObservationTrace run_scenario(const Scenario& s, int secret, Profile profile, const ScenarioOptions& opts) {
  Rig rig(scenario_config(s, profile, opts), profile);
  try {
    s.script(rig, secret);
  } catch (const SimError& e) {
    throw SimError(ErrorCode::ScriptError, s.name + " (" + std::string(to_string(profile)) + ", secret " +
                                               std::to_string(secret) + "): " + e.what());
  }
  rig.machine().audit();
  return rig.observations();
}

LeakVerdict leak_oracle(const Scenario& s, Profile profile, const ScenarioOptions& opts) {
  ObservationTrace t0 = run_scenario(s, 0, profile, opts);
  ObservationTrace t1 = run_scenario(s, 1, profile, opts);
  LeakVerdict v;
  v.leaks = t0 != t1;
  if (v.leaks) v.witness = std::make_pair(std::move(t0), std::move(t1));
  return v;
}

std::vector<MatrixCell> attack_matrix(const std::vector<std::string>& scenarios, const std::vector<Profile>& profiles,
                                      const ScenarioOptions& opts) {
  std::vector<std::future<std::vector<MatrixCell>>> jobs;
  for (const std::string& name : scenarios) {
    const Scenario& s = find_scenario(name);
    jobs.push_back(std::async(std::launch::async, [&s, &profiles, opts] {
      std::vector<MatrixCell> row;
      for (Profile p : profiles) {
        MatrixCell cell;
        cell.scenario = s.name;
        cell.profile = p;
        cell.expected = s.expected(p, opts);
        cell.secret0 = run_scenario(s, 0, p, opts);
        cell.secret1 = run_scenario(s, 1, p, opts);
        cell.verdict = cell.secret0 != cell.secret1 ? Verdict::Leaks : Verdict::Sealed;
        row.push_back(std::move(cell));
      }
      return row;
    }));
  }
  std::vector<MatrixCell> cells;
  for (auto& j : jobs) {
    for (MatrixCell& c : j.get()) cells.push_back(std::move(c));
  }
  return cells;
}

std::string matrix_json(const std::vector<MatrixCell>& cells, const ScenarioOptions& opts) {
  using nlohmann::ordered_json;
  auto trace = [](const ObservationTrace& t) {
    ordered_json a = ordered_json::array();
    for (const Probe& p : t) a.push_back({{"probe", p.label}, {"latency", p.latency}});
    return a;
  };
  ordered_json scenarios = ordered_json::object();
  bool all = true;
  for (const MatrixCell& c : cells) {
    all = all && c.matches();
    scenarios[c.scenario][std::string(to_string(c.profile))] = {{"verdict", std::string(to_string(c.verdict))},
                                                                {"expected", std::string(to_string(c.expected))},
                                                                {"match", c.matches()},
                                                                {"secret0", trace(c.secret0)},
                                                                {"secret1", trace(c.secret1)}};
  }
  ordered_json j;
  j["options"] = {{"block_uncommitted_eviction", opts.block_uncommitted_eviction},
                  {"filter_tlb_entries", opts.filter_tlb_entries}};
  j["all_match"] = all;
  j["scenarios"] = scenarios;
  return j.dump(2) + "\n";
}

}  // namespace mtsim
