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
#include <string_view>

#include "mtsim/trace.hpp"

namespace mtsim {

enum class WorkloadKind : std::uint8_t { Stride, PointerChase, Random, SharedProducerConsumer, Mlp };

std::string_view to_string(WorkloadKind k);
WorkloadKind parse_workload_kind(std::string_view s);

struct WorkloadParams {
  std::uint64_t working_set = 1 << 20;  // bytes
  std::uint64_t ops = 10'000;           // memory ops in the trace
  std::uint64_t stride = 8;             // bytes, stride only
  unsigned sharers = 2;                 // cores, shared_producer_consumer only
  unsigned window = 4;                  // fresh lines per window, mlp only
  unsigned rounds = 8;                  // dependent reuse passes per window, mlp only
  Addr base = 0x100000;
};

// Single-thread kinds run on 0.0.
//   stride                   loads walking the working set at a fixed stride
//   pointer_chase            dependent loads around a random cyclic permutation of its lines
//   random                   uniformly random lines of the working set
//   shared_producer_consumer core 0 stores a buffer, the others read it back, separated by barriers
//   mlp                      windows of independent misses to fresh lines, each followed by
//                            dependent reuse of those lines and a commit
Trace gen_workload(WorkloadKind kind, const WorkloadParams& p, std::uint64_t seed);

}  // namespace mtsim
