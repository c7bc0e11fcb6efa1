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

#include <string>

#include "mtsim/stats.hpp"
#include "mtsim/trace.hpp"

namespace mtsim {

// Stats as pretty-printed JSON with a fixed key order. With events, the
// per-access and coherence logs of the run are appended under "events".
std::string stats_json(const StatsSnapshot& s);
std::string run_report_json(const RunResult& r, bool events);

}  // namespace mtsim
