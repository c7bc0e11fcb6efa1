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

#include "mtsim/workload.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace mtsim {

std::string_view to_string(WorkloadKind k) {
  switch (k) {
    case WorkloadKind::Stride: return "stride";
    case WorkloadKind::PointerChase: return "pointer_chase";
    case WorkloadKind::Random: return "random";
    case WorkloadKind::SharedProducerConsumer: return "shared_producer_consumer";
    case WorkloadKind::Mlp: return "mlp";
  }
  return "?";
}

WorkloadKind parse_workload_kind(std::string_view s) {
  for (auto k : {WorkloadKind::Stride, WorkloadKind::PointerChase, WorkloadKind::Random,
                 WorkloadKind::SharedProducerConsumer, WorkloadKind::Mlp}) {
    if (to_string(k) == s) return k;
  }
  throw SimError(ErrorCode::BadParams, "unknown workload kind '" + std::string(s) + "'");
}

namespace {

[[noreturn]] void bad(const std::string& what) { throw SimError(ErrorCode::BadParams, what); }

TraceRecord mem(ThreadId t, TraceOp op, Addr a, std::uint64_t value = 0, bool dep = false) {
  TraceRecord r;
  r.thread = t;
  r.op = op;
  r.vaddr = a;
  r.value = value;
  r.dep = dep;
  return r;
}

TraceRecord bare(ThreadId t, TraceOp op, InstId inst = 0) {
  TraceRecord r;
  r.thread = t;
  r.op = op;
  r.inst = inst;
  return r;
}

}  // namespace

Trace gen_workload(WorkloadKind kind, const WorkloadParams& p, std::uint64_t seed) {
  if (p.ops == 0) bad("ops must be positive");
  if (p.working_set < kLineSize) bad("working_set must be at least one line");
  if (p.base % kLineSize != 0) bad("base must be line aligned");
  const std::uint64_t lines = p.working_set / kLineSize;
  const ThreadId t0{0, 0};
  std::mt19937_64 rng(seed);
  Trace trace;
  auto& out = trace.records;

  switch (kind) {
    case WorkloadKind::Stride:
      if (p.stride == 0) bad("stride must be positive");
      for (std::uint64_t i = 0; i < p.ops; ++i) {
        out.push_back(mem(t0, TraceOp::Load, p.base + (i * p.stride) % p.working_set));
      }
      break;

    case WorkloadKind::PointerChase: {
      std::vector<std::uint64_t> order(lines);
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), rng);
      for (std::uint64_t i = 0; i < p.ops; ++i) {
        out.push_back(mem(t0, TraceOp::Load, p.base + order[i % lines] * kLineSize, 0, i > 0));
      }
      break;
    }

    case WorkloadKind::Random:
      for (std::uint64_t i = 0; i < p.ops; ++i) {
        out.push_back(mem(t0, TraceOp::Load, p.base + (rng() % lines) * kLineSize));
      }
      break;

    case WorkloadKind::SharedProducerConsumer: {
      if (p.sharers < 2) bad("shared_producer_consumer needs at least 2 sharers");
      std::uint64_t emitted = 0;
      std::uint64_t round = 0;
      while (emitted < p.ops) {
        for (std::uint64_t l = 0; l < lines && emitted < p.ops; ++l, ++emitted) {
          out.push_back(mem(t0, TraceOp::Store, p.base + l * kLineSize, round * lines + l + 1));
        }
        for (unsigned c = 0; c < p.sharers; ++c) out.push_back(bare({c, 0}, TraceOp::Barrier));
        for (unsigned c = 1; c < p.sharers; ++c) {
          for (std::uint64_t l = 0; l < lines && emitted < p.ops; ++l, ++emitted) {
            out.push_back(mem({c, 0}, TraceOp::Load, p.base + l * kLineSize));
          }
        }
        for (unsigned c = 0; c < p.sharers; ++c) out.push_back(bare({c, 0}, TraceOp::Barrier));
        ++round;
      }
      break;
    }

    case WorkloadKind::Mlp: {
      if (p.window == 0 || (Addr{1} << kLinesPerPageBits) % p.window != 0) bad("window must divide the lines in a page");
      InstId next = 1;
      std::uint64_t emitted = 0;
      std::uint64_t w = 0;
      while (emitted < p.ops) {
        auto line = [&](unsigned i) { return p.base + ((w * p.window + i) * kLineSize) % p.working_set; };
        for (unsigned i = 0; i < p.window && emitted < p.ops; ++i, ++emitted, ++next) {
          out.push_back(mem(t0, TraceOp::Load, line(i)));
        }
        for (unsigned r = 0; r < p.rounds; ++r) {
          for (unsigned i = 0; i < p.window && emitted < p.ops; ++i, ++emitted, ++next) {
            out.push_back(mem(t0, TraceOp::Load, line(i), 0, true));
          }
        }
        out.push_back(bare(t0, TraceOp::CommitTo, next - 1));
        ++w;
      }
      break;
    }
  }
  return trace;
}

}  // namespace mtsim
