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

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "mtsim/attack.hpp"
#include "mtsim/config.hpp"
#include "mtsim/report.hpp"
#include "mtsim/sweep.hpp"
#include "mtsim/trace.hpp"
#include "mtsim/workload.hpp"

using namespace mtsim;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitLeak = 1;
constexpr int kExitInput = 2;

struct Common {
  std::string config;
  std::vector<std::string> sets;
  std::string out;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "config file of key = value lines");
  app->add_option("--set", c.sets, "override one config key, key=value")->take_all();
  app->add_option("--out", c.out, "output file (default stdout)");
  app->add_option("--seed", c.seed, "seed");
}

RunConfig load_config(const Common& c) {
  RunConfig cfg;
  if (!c.config.empty()) {
    std::ifstream in(c.config);
    if (!in) throw SimError(ErrorCode::ConfigError, "cannot open config '" + c.config + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    cfg = RunConfig::parse(ss.str());
  }
  for (const std::string& s : c.sets) apply_override(cfg, s);
  if (c.seed) cfg.seed = *c.seed;
  cfg.validate();
  return cfg;
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw SimError(ErrorCode::BadParams, "cannot write '" + path + "'");
  out << text;
}

std::vector<std::uint64_t> parse_values(const std::string& csv) {
  std::vector<std::uint64_t> v;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stoull(item, &used, 0));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw SimError(ErrorCode::BadParams, "bad sweep value '" + item + "'");
    }
  }
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mtsim: speculative filter-cache memory system simulator"};
  app.require_subcommand(1);

  Common run_c;
  std::string run_trace_path;
  bool log_events = false;
  CLI::App* run = app.add_subcommand("run", "replay a trace and report stats as JSON");
  add_common(run, run_c);
  run->add_option("--trace", run_trace_path, "trace file")->required();
  run->add_flag("--log-events", log_events, "include per-access and coherence logs");

  Common atk_c;
  std::string scenario = "all";
  std::string profile = "all";
  std::string report;
  bool expect_sealed = false;
  ScenarioOptions sopts;
  CLI::App* attack = app.add_subcommand("attack", "run attack scenarios through the leak oracle");
  attack->add_option("--scenario", scenario, "scenario name or all");
  attack->add_option("--profile", profile, "unprotected, muontrap, muontrap-clear or all");
  attack->add_option("--report", report, "JSON matrix output (default stdout)");
  attack->add_flag("--expect-sealed", expect_sealed, "exit 1 unless every verdict matches the catalog");
  attack->add_flag("--block-uncommitted-eviction", sopts.block_uncommitted_eviction,
                   "never evict uncommitted filter lines for a speculative fill");
  attack->add_option("--filter-tlb-entries", sopts.filter_tlb_entries, "filter TLB size");
  bool list = false;
  attack->add_flag("--list", list, "list scenarios and exit");

  Common sw_c;
  std::string sw_trace_path;
  std::string axis;
  std::string values;
  CLI::App* sw = app.add_subcommand("sweep", "rerun a trace across filter-cache sizes or associativities");
  add_common(sw, sw_c);
  sw->add_option("--trace", sw_trace_path, "trace file")->required();
  sw->add_option("--axis", axis, "l0_size or l0_ways")->required();
  sw->add_option("--values", values, "comma-separated ascending values")->required();

  Common gen_c;
  std::string kind;
  WorkloadParams wp;
  CLI::App* gen = app.add_subcommand("gen", "write a synthetic workload trace");
  gen->add_option("--kind", kind, "stride, pointer_chase, random, shared_producer_consumer or mlp")->required();
  gen->add_option("--working-set", wp.working_set, "bytes");
  gen->add_option("--ops", wp.ops, "memory ops");
  gen->add_option("--stride", wp.stride, "bytes (stride)");
  gen->add_option("--sharers", wp.sharers, "cores (shared_producer_consumer)");
  gen->add_option("--window", wp.window, "lines per window (mlp)");
  gen->add_option("--rounds", wp.rounds, "reuse passes per window (mlp)");
  gen->add_option("--base", wp.base, "base address");
  gen->add_option("--out", gen_c.out, "output file (default stdout)");
  gen->add_option("--seed", gen_c.seed, "seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*run) {
      const RunConfig cfg = load_config(run_c);
      const Trace trace = load_trace(run_trace_path);
      RunOptions opts;
      opts.log_events = log_events;
      emit(run_c.out, run_report_json(run_trace(cfg, trace, opts), log_events));
      return kExitOk;
    }

    if (*attack) {
      if (list) {
        for (const Scenario& s : scenario_catalog()) std::cout << s.name << "  " << s.summary << "\n";
        return kExitOk;
      }
      std::vector<std::string> names;
      if (scenario == "all") {
        for (const Scenario& s : scenario_catalog()) names.push_back(s.name);
      } else {
        names.push_back(find_scenario(scenario).name);
      }
      std::vector<Profile> profiles;
      if (profile == "all") {
        profiles = {Profile::Unprotected, Profile::MuonTrap, Profile::MuonTrapClear};
      } else {
        try {
          profiles = {parse_profile(profile)};
        } catch (const SimError&) {
          throw SimError(ErrorCode::BadParams, "unknown profile '" + profile + "'");
        }
      }
      const auto cells = attack_matrix(names, profiles, sopts);
      emit(report, matrix_json(cells, sopts));
      int rc = kExitOk;
      for (const MatrixCell& c : cells) {
        std::fprintf(stderr, "%-24s %-15s %-6s (expected %s)\n", c.scenario.c_str(),
                     std::string(to_string(c.profile)).c_str(), std::string(to_string(c.verdict)).c_str(),
                     std::string(to_string(c.expected)).c_str());
        if (expect_sealed && !c.matches()) rc = kExitLeak;
      }
      return rc;
    }

    if (*sw) {
      const RunConfig cfg = load_config(sw_c);
      const Trace trace = load_trace(sw_trace_path);
      const SweepAxis a = parse_sweep_axis(axis);
      emit(sw_c.out, sweep_csv(a, sweep(cfg, a, parse_values(values), trace)));
      return kExitOk;
    }

    if (*gen) {
      const Trace t = gen_workload(parse_workload_kind(kind), wp, gen_c.seed.value_or(1));
      emit(gen_c.out, format_trace(t));
      return kExitOk;
    }
  } catch (const SimError& e) {
    std::cerr << "mtsim: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitInput;
}
