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

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "v1spin/lindblad.hpp"
#include "v1spin/pulsesim.hpp"
#include "v1spin/spincore.hpp"

namespace v1spin {

/// Flat key/value run configuration. Every key has a default in each preset;
/// unknown keys and malformed values raise ConfigError.
///
/// Numeric values accept a unit suffix matching the key's quantity:
/// frequencies Hz|kHz|MHz|GHz, times ns|us|ms|s, fields G|mT. Values are
/// stored in the key's native unit (see describe()).
class RunConfig {
 public:
  enum class Kind { number, integer, choice, text };

  struct KeyInfo {
    std::string name;
    Kind kind = Kind::number;
    std::string unit;                  // native unit, empty if dimensionless
    std::vector<std::string> choices;  // Kind::choice
    std::string help;
  };

  explicit RunConfig(const std::string& preset = "main_text");

  static const std::vector<KeyInfo>& keys();
  static const std::vector<std::string>& presets();
  static bool known(const std::string& key);

  /// Setting "preset" resets every other key to that preset's defaults.
  void set(const std::string& key, const std::string& value);
  /// Parses "key=value" (spaces around '=' allowed).
  void set_assignment(const std::string& assignment);

  const std::string& preset() const { return preset_; }
  std::string get(const std::string& key) const;
  double number(const std::string& key) const;
  long long integer(const std::string& key) const;
  std::uint64_t seed() const;

  /// Flat "key = value" text; '#' starts a comment. A preset line is applied
  /// before the other keys regardless of position.
  void load_text(const std::string& text);
  /// Sidecar or plain object: {"preset": ..., "params": {...}} or {key: value}.
  void load_json(const std::string& text);
  /// Dispatches on the first non-blank character ('{' means JSON).
  void load_file(const std::string& path);

  /// All resolved values in registry order, preset first.
  std::vector<std::pair<std::string, std::string>> entries() const;
  std::string to_text() const;

  spincore::SpinSystem spin_system() const;
  lindblad::FineStructureModel model() const;
  lindblad::MwScheme scheme() const;
  pulsesim::SequenceSettings settings() const;
  std::optional<pulsesim::NuclearCoupling> coupling() const;

  bool operator==(const RunConfig&) const = default;

 private:
  std::string preset_;
  std::map<std::string, std::string> values_;
};

/// Converts "12.5kHz" style input to the native unit; throws ConfigError.
double parse_quantity(const std::string& text, const std::string& native_unit);

}  // namespace v1spin
