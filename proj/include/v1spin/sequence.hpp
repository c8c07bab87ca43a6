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

// Pulse-sequence text format. One statement per line, '#' starts a comment:
//
//   laser   CHAN DUR [with MWk ...]     CHAN in A1 A2 OFFRES
//   readout CHAN DUR [with MWk ...]     CHAN in A1 A2
//   mw      MWk ROT [PHASE]             ROT: pi | pi/2 | <n>deg | DUR
//   wait    DUR
//   sweep   NAME DUR DUR POINTS
//
// DUR is <number>ns|us|ms or the swept NAME. PHASE is +x -x +y -y (default +x).

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "v1spin/common.hpp"

namespace v1spin::pulsesim {

enum class Channel { A1, A2, OFFRES, MW1, MW2, MW3 };
enum class Unit { ns, us, ms };
enum class Phase { plus_x, minus_x, plus_y, minus_y };

std::string to_string(Channel c);
std::string to_string(Unit u);
std::string to_string(Phase p);
bool is_mw(Channel c);
/// 1..3 for MW channels.
int mw_index(Channel c);
Channel mw_channel(int index);

struct Duration {
  double value = 0;
  Unit unit = Unit::us;

  double microseconds() const;
  bool operator==(const Duration&) const = default;
};

/// A literal duration or a reference to the swept symbol.
struct DurationRef {
  std::optional<Duration> literal;
  std::string symbol;

  bool is_symbol() const { return !literal.has_value(); }
  double microseconds(double swept_us) const;
  bool operator==(const DurationRef&) const = default;
};

struct Rotation {
  enum class Kind { pi, half_pi, degrees, duration };
  Kind kind = Kind::pi;
  double degrees = 0;
  DurationRef duration;

  bool operator==(const Rotation&) const = default;
};

struct MwPulse {
  Channel channel = Channel::MW1;
  Rotation rotation;
  Phase phase = Phase::plus_x;
  bool operator==(const MwPulse&) const = default;
};

struct Wait {
  DurationRef duration;
  bool operator==(const Wait&) const = default;
};

struct Laser {
  Channel channel = Channel::A2;
  DurationRef duration;
  std::vector<Channel> with;
  bool operator==(const Laser&) const = default;
};

struct Readout {
  Channel channel = Channel::A2;
  DurationRef duration;
  std::vector<Channel> with;
  bool operator==(const Readout&) const = default;
};

struct SweepDecl {
  std::string symbol;
  Duration start;
  Duration stop;
  int points = 1;

  std::vector<double> values_us() const;
  bool operator==(const SweepDecl&) const = default;
};

using Element = std::variant<MwPulse, Wait, Laser, Readout>;

struct PulseSequence {
  std::vector<Element> elements;
  std::optional<SweepDecl> sweep;

  bool operator==(const PulseSequence&) const = default;
};

/// Throws ParseError carrying 1-based line and column.
PulseSequence parse_sequence(std::string_view text);

/// Canonical text: sweep first, lowercase keywords, single spaces.
std::string print_sequence(const PulseSequence& seq);

}  // namespace v1spin::pulsesim
