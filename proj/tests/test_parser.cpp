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

#include <doctest.h>

#include <fstream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "v1spin/pulsesim.hpp"
#include "v1spin/sequence.hpp"

using namespace v1spin;
using namespace v1spin::pulsesim;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Every statement form, every channel, unit, rotation and phase.
std::vector<std::string> corpus() {
  return {
      "mw MW1 pi/2 +x",
      "mw MW2 pi",
      "mw MW3 90deg -y",
      "mw MW1 -45.5deg +y",
      "mw MW2 1.5us -x",
      "mw MW3 250ns",
      "mw MW1 0.002ms +x",
      "wait 10us",
      "wait 1e3ns",
      "wait 0.5ms",
      "laser A1 10us",
      "laser A2 40us with MW3",
      "laser OFFRES 1ms",
      "laser A2 40us with MW1 MW3",
      "laser A1 5us with MW1 MW2 MW3",
      "readout A2 150ns",
      "readout A1 1us with MW2",
      "sweep tau 0us 200us 401\nlaser A2 40us with MW3\nmw MW1 pi/2 +x\nwait tau\nmw MW1 pi +x\n"
      "wait tau\nmw MW1 pi/2 -x\nreadout A2 150ns",
      "sweep t 0ns 500ns 11\nmw MW1 t\nreadout A2 150ns",
      "laser A2 40us\nsweep t 0us 7us 41\nmw MW2 t +y\nmw MW3 pi\nreadout A2 150ns",
      "sweep x 1us 2us 1\nlaser A2 x with MW3\nreadout A2 x",
      "sweep tau_init 0us 80us 81\nlaser OFFRES 40us\nlaser A2 tau_init with MW3\nreadout A2 150ns",
      "# comment only line\nlaser A2 40us # trailing\n\n\nreadout A2 150ns",
      "LASER a2 40US WITH mw3\nReadOut A2 150Ns",
      "  mw   MW1   pi/2   +X  ",
      "mw MW1 pi/2 +x\r\nwait 1us\r\nmw MW1 pi/2 +x\r\n",
      "sweep T_2 0ms 1ms 3\nwait T_2",
      "sweep tau 0us 10us 5\nwait tau\nwait tau\nwait 1us",
      "mw MW1 1e-1us",
      "mw MW2 360deg +y",
      "mw MW3 0deg",
      "wait 123456789ns",
      "laser OFFRES 0.25us\nlaser A1 1us\nlaser A2 1us",
      "readout A1 150ns\nreadout A2 150ns",
      "mw MW1 pi -y\nmw MW2 pi -y\nmw MW3 pi -y",
      "mw MW1 pi/2 +y\nmw MW2 pi/2 +y\nmw MW3 pi/2 +y",
      "sweep phi 0us 3us 31\nlaser A2 40us with MW3\nmw MW1 phi -y\nreadout A2 150ns",
      "laser A2 2.5e1us with MW3 MW1\nreadout A2 1.5e2ns",
      "wait 0.1us\nwait 0.10us\nwait 1.0e-1us",
      "sweep s 5us 0us 6\nwait s",
      "mw MW2 pi\n#\n#\nmw MW2 pi",
      "laser A2 40us with MW2",
      "readout A2 150ns with MW1 MW3",
      "sweep d 0us 1us 2\nreadout A2 d with MW3",
      "sweep d 0us 1us 2\nlaser OFFRES d",
      "mw MW1 12.25deg +x\nwait 3.75us\nmw MW1 12.25deg -x",
      "laser A1 40us with MW3\nmw MW3 pi/2\nwait 5us\nmw MW3 pi/2 -x\nreadout A1 150ns",
      "mw MW1 pi/2\nwait\t1us",
      "sweep q 0us 2us 3\nmw MW1 pi/2\nwait q\nmw MW2 q\nlaser A2 q with MW1\nreadout A1 q",
      "wait 1ms\nwait 1us\nwait 1ns",
  };
}

}  // namespace

TEST_CASE("single microwave statement parses to its element") {
  const auto s = parse_sequence("mw MW1 pi/2 +x");
  REQUIRE(s.elements.size() == 1);
  const auto& m = std::get<MwPulse>(s.elements[0]);
  CHECK(m.channel == Channel::MW1);
  CHECK(m.rotation.kind == Rotation::Kind::half_pi);
  CHECK(m.phase == Phase::plus_x);
  CHECK_FALSE(s.sweep.has_value());
}

TEST_CASE("bundled Hahn echo has seven elements and a sweep on tau") {
  const auto s = parse_sequence(slurp(V1SPIN_SOURCE_DIR "/sequences/hahn_echo.seq"));
  CHECK(s.elements.size() == 7);
  REQUIRE(s.sweep.has_value());
  CHECK(s.sweep->symbol == "tau");
  CHECK(s.sweep->points == 401);
  CHECK(s.sweep->stop.microseconds() == 200.0);
  CHECK(std::get<Wait>(s.elements[2]).duration.symbol == "tau");
  CHECK(s == hahn_echo_sequence(200, 401));
}

TEST_CASE("bundled initialization sequence matches its builder") {
  const auto s = parse_sequence(slurp(V1SPIN_SOURCE_DIR "/sequences/init_fidelity.seq"));
  CHECK(s == init_fidelity_sequence(80, 81));
}

TEST_CASE("unknown channel is reported with its location") {
  try {
    parse_sequence("mw MW7 pi");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("unknown channel MW7") != std::string::npos);
    CHECK(e.line() == 1);
    CHECK(e.column() == 4);
  }
}

TEST_CASE("parse errors carry line and column") {
  struct Case {
    const char* text;
    const char* fragment;
    std::size_t line;
    std::size_t column;
  };
  const Case cases[] = {
      {"laser A2 40us\nwait tau", "undeclared symbol tau", 2, 6},
      {"wait 10", "malformed duration", 1, 6},
      {"wait 10s", "malformed duration", 1, 6},
      {"wait abc1us", "undeclared symbol", 1, 6},
      {"wait 0us", "duration must be > 0", 1, 6},
      {"wait -1us", "duration must be > 0", 1, 6},
      {"sweep a 0us 1us 2\nsweep b 0us 1us 2", "only one sweep", 2, 1},
      {"sweep a 0us 1us 0", "point count", 1, 17},
      {"sweep a 0us 1us 2.5", "point count", 1, 17},
      {"mw A2 pi", "mw needs MW1", 1, 4},
      {"laser MW1 1us", "optical channel", 1, 7},
      {"readout OFFRES 1us", "readout needs A1 or A2", 1, 9},
      {"laser A2 1us with A1", "microwave channels", 1, 19},
      {"laser A2 1us with", "expected microwave channel", 1, 18},
      {"laser A2 1us MW3", "unexpected token", 1, 14},
      {"laser A2 1us with MW3 MW3", "duplicate channel", 1, 23},
      {"laser OFFRES 1us with MW3", "not allowed on OFFRES", 1, 18},
      {"mw MW1 pi +z", "unknown phase", 1, 11},
      {"mw MW1 pi +x extra", "unexpected token", 1, 14},
      {"mw MW1 xdeg", "malformed rotation", 1, 8},
      {"pulse MW1", "unknown statement", 1, 1},
      {"\n\n  laser", "expected channel", 3, 8},
      {"", "empty sequence", 1, 1},
      {"# nothing\n\n", "empty sequence", 1, 1},
      {"sweep t 0us 1us 3", "empty sequence", 1, 1},
  };
  for (const auto& c : cases) {
    CAPTURE(std::string(c.text));
    try {
      parse_sequence(c.text);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find(c.fragment) != std::string::npos);
      CHECK(e.line() == c.line);
      CHECK(e.column() == c.column);
    }
  }
}

TEST_CASE("canonical printing is idempotent over the corpus") {
  const auto c = corpus();
  CHECK(c.size() == 50);
  for (const auto& text : c) {
    CAPTURE(text);
    const auto first = parse_sequence(text);
    const std::string printed = print_sequence(first);
    const auto second = parse_sequence(printed);
    CHECK(second == first);
    CHECK(print_sequence(second) == printed);
  }
}

TEST_CASE("canonical form: sweep first, lowercase keywords, phase always printed") {
  const auto s = parse_sequence("LASER a2 40US WITH mw3\nsweep t 0us 1us 2\nMW mw1 t\nReadout A2 150ns");
  CHECK(print_sequence(s) ==
        "sweep t 0us 1us 2\nlaser A2 40us with MW3\nmw MW1 t +x\nreadout A2 150ns\n");
  // Units are kept as written.
  CHECK(print_sequence(parse_sequence("wait 1000ns")) == "wait 1000ns\n");
  CHECK(print_sequence(parse_sequence("wait 1e3ns")) == "wait 1000ns\n");
}

TEST_CASE("duration conversion and sweep grid") {
  CHECK(Duration{150, Unit::ns}.microseconds() == doctest::Approx(0.15));
  CHECK(Duration{2, Unit::ms}.microseconds() == 2000);
  const auto s = parse_sequence("sweep t 0us 1ms 5\nwait t");
  const auto v = s.sweep->values_us();
  REQUIRE(v.size() == 5);
  CHECK(v.front() == 0);
  CHECK(v.back() == 1000);
  CHECK(v[1] == 250);
}

TEST_CASE("parser is reentrant across threads") {
  const auto c = corpus();
  std::vector<std::string> a(c.size()), b(c.size());
  std::thread t1([&] {
    for (std::size_t i = 0; i < c.size(); ++i) a[i] = print_sequence(parse_sequence(c[i]));
  });
  for (std::size_t i = 0; i < c.size(); ++i) b[i] = print_sequence(parse_sequence(c[i]));
  t1.join();
  CHECK(a == b);
}
