// Copyright 2026 The v1spin Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Command layer shared by the C API and the command-line tool.

#include <array>
#include <string>
#include <vector>

#include "v1spin/common.hpp"
#include "v1spin/run_config.hpp"

namespace v1spin::app {

inline constexpr const char* kVersion = "0.1.0";

struct Output {
  Trace trace;
  std::vector<std::string> warnings;
};

const std::vector<std::string>& simulate_kinds();
const std::vector<std::string>& fit_kinds();

/// kind: ple, odmr, rabi, fid, echo, pumping, linewidth, a2a1.
Output simulate(const std::string& kind, const RunConfig& cfg);

/// Parses and executes a sequence; the observable key picks the column.
Output run_sequence(const std::string& text, const RunConfig& cfg);

/// kind: lorentzian, g2, rabi, decay, eseem, polarization. Returns JSON.
std::string fit(const std::string& kind, const Trace& trace, const RunConfig& cfg);

/// Visibilities (MW3 pair, swapped MW2 pair, MW1 pair) to populations. JSON.
std::string fit_populations(const std::array<double, 3>& visibilities);

/// Everything needed to repeat a run: command, kind, sequence text, params.
std::string sidecar_json(const std::string& command, const std::string& kind,
                         const std::string& sequence_text, const RunConfig& cfg);

struct Sidecar {
  std::string command;
  std::string kind;
  std::string sequence;
  RunConfig config;
};
Sidecar read_sidecar(const std::string& json_text);

/// Re-executes a sidecar.
Output rerun(const Sidecar& s);

/// Trace rendered in the configured format (csv or json).
std::string render(const Trace& trace, const RunConfig& cfg);

}  // namespace v1spin::app
