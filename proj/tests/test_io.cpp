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

#include <cmath>
#include <cstring>
#include <limits>
#include <random>

#include "v1spin/run_config.hpp"
#include "v1spin/trace_io.hpp"

using namespace v1spin;

namespace {

double random_double(std::mt19937_64& rng) {
  // Arbitrary finite bit patterns, including subnormals.
  for (;;) {
    const std::uint64_t bits = rng();
    double d;
    std::memcpy(&d, &bits, sizeof d);
    if (std::isfinite(d)) return d;
  }
}

}  // namespace

TEST_CASE("CSV write -> read -> write is a fixpoint") {
  std::mt19937_64 rng(11);
  for (int round = 0; round < 50; ++round) {
    Trace t;
    t.x_label = "tau_us";
    t.y_label = "signal";
    t.meta["command"] = "simulate echo";
    t.meta["note"] = "a = b, with spaces";
    const std::size_t n = 1 + rng() % 40;
    for (std::size_t i = 0; i < n; ++i) {
      t.x.push_back(random_double(rng));
      t.y.push_back(random_double(rng));
      if (round % 2) t.sigma.push_back(std::abs(random_double(rng)));
    }
    t.x[0] = -0.0;
    const std::string first = io::to_csv(t);
    const Trace back = io::parse_csv(first);
    CHECK(io::to_csv(back) == first);
    REQUIRE(back.size() == n);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(std::memcmp(&back.x[i], &t.x[i], sizeof(double)) == 0);
      CHECK(std::memcmp(&back.y[i], &t.y[i], sizeof(double)) == 0);
    }
    CHECK(back.meta == t.meta);
    CHECK(back.x_label == "tau_us");
    CHECK(back.has_sigma() == (round % 2 == 1));
  }
}

TEST_CASE("shortest round-trip formatting") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1e-300) == "1e-300");
  CHECK(format_double(980.5) == "980.5");
  CHECK(format_double(std::numeric_limits<double>::denorm_min()) == "5e-324");
}

TEST_CASE("malformed rows cite their line") {
  struct Case {
    const char* text;
    std::size_t line;
    const char* fragment;
  };
  const Case cases[] = {
      {"x,y\n1,2\n3,abc\n", 3, "malformed number 'abc'"},
      {"# a=b\nx,y\n1,2\n\n4,5,6\n", 5, "expected 2 columns"},
      {"x,y,sigma\n1,2\n", 2, "expected 3 columns"},
      {"x\n", 1, "header must name"},
      {"1,2\n2,3x\n", 2, "malformed number"},
      {"x,y\n1,\n", 2, "malformed number ''"},
  };
  for (const auto& c : cases) {
    CAPTURE(std::string(c.text));
    try {
      io::parse_csv(c.text);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == c.line);
      CHECK(std::string(e.what()).find("line " + std::to_string(c.line)) == 0);
      CHECK(std::string(e.what()).find(c.fragment) != std::string::npos);
    }
  }
}

TEST_CASE("headerless CSV and free comments are accepted") {
  const Trace t = io::parse_csv("# plain comment\n1,2\n3,4\r\n");
  CHECK(t.size() == 2);
  CHECK(t.y[1] == 4);
  CHECK(t.meta.empty());
}

TEST_CASE("JSON trace round trip") {
  Trace t;
  t.x = {0, 0.1, 1e-20};
  t.y = {1, -2.5, 3};
  t.sigma = {0.1, 0.2, 0.3};
  t.meta["k"] = "v";
  const Trace back = io::from_json(io::to_json(t));
  CHECK(back.x == t.x);
  CHECK(back.y == t.y);
  CHECK(back.sigma == t.sigma);
  CHECK(back.meta == t.meta);
  CHECK_THROWS_AS(io::from_json("{\"x\": [1]}"), ParseError);
  CHECK_THROWS_AS(io::from_json("not json"), ParseError);
}

TEST_CASE("run config presets enumerate every key") {
  const RunConfig a("main_text"), b("s7");
  CHECK(a.entries().size() == RunConfig::keys().size() + 1);
  CHECK(a.number("d_gs") == 2.25);
  CHECK(a.number("d_es") == 492.5);
  CHECK(b.number("d_gs") == 4.5);
  CHECK(b.number("d_es") == 487.5);
  CHECK(a.get("g_gs") == b.get("g_gs"));
  for (const auto& [k, v] : a.entries()) CHECK_FALSE(v.empty());
}

TEST_CASE("run config rejects unknown keys and malformed values") {
  RunConfig c;
  CHECK_THROWS_WITH_AS(c.set("bogus", "1"), doctest::Contains("unknown configuration key"), ConfigError);
  CHECK_THROWS_AS(c.set("b0", "abc"), ConfigError);
  CHECK_THROWS_AS(c.set("b0", "5us"), ConfigError);
  CHECK_THROWS_AS(c.set("echo_points", "1.5"), ConfigError);
  CHECK_THROWS_AS(c.set("model", "eight_level"), ConfigError);
  CHECK_THROWS_AS(c.set("preset", "s8"), ConfigError);
  CHECK_THROWS_AS(c.set_assignment("b0"), ConfigError);
  CHECK_THROWS_AS(RunConfig("nope"), ConfigError);
}

TEST_CASE("unit suffixes convert to the native unit") {
  RunConfig c;
  c.set("a_par", "10kHz");
  CHECK(c.number("a_par") == 10);
  c.set("a_par", "0.012MHz");
  CHECK(c.number("a_par") == doctest::Approx(12).epsilon(1e-15));
  c.set("echo_tau_max", "0.2ms");
  CHECK(c.number("echo_tau_max") == doctest::Approx(200).epsilon(1e-15));
  c.set("settle_us", "500ns");
  CHECK(c.number("settle_us") == doctest::Approx(0.5).epsilon(1e-15));
  c.set("b0", "9.2mT");
  CHECK(c.number("b0") == doctest::Approx(92).epsilon(1e-15));
  c.set("rabi_channel", "2");
  CHECK(c.get("rabi_channel") == "MW2");
  c.set("rabi_channel", "mw3");
  CHECK(c.get("rabi_channel") == "MW3");
  CHECK(parse_quantity("+1.5e3", "") == 1500);
}

TEST_CASE("flat config text: preset first, comments, line numbers in errors") {
  RunConfig c;
  c.load_text("# comment\nb0 = 50 # trailing\n\npreset = s7\n");
  CHECK(c.preset() == "s7");
  CHECK(c.number("b0") == 50);  // applied after the preset
  CHECK(c.number("d_gs") == 4.5);
  try {
    c.load_text("b0 = 1\nnonsense\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("config line 2") != std::string::npos);
  }
}

TEST_CASE("config text and JSON reload to the same configuration") {
  RunConfig c("s7");
  c.set("a_par", "12.345678901234567");
  c.set("t2_us", "0.1");
  c.set("observable", "p-1/2");
  RunConfig from_text("main_text");
  from_text.load_text(c.to_text());
  CHECK(from_text == c);

  RunConfig from_json;
  from_json.load_json(R"({"preset": "s7", "params": {"a_par": 12.345678901234567, "t2_us": 0.1,
                          "observable": "p-1/2"}})");
  CHECK(from_json == c);
  CHECK_THROWS_AS(from_json.load_json("[1, 2]"), ConfigError);
  CHECK_THROWS_AS(from_json.load_json(R"({"params": {"a_par": [1]}})"), ConfigError);
}

TEST_CASE("config maps onto the physics structs") {
  RunConfig c;
  c.set("model", "ten_level");
  c.set("nucleus", "off");
  const auto m = c.model();
  CHECK(m.variant == lindblad::Variant::ten_level);
  CHECK(m.d_es == 492.5);
  CHECK_FALSE(c.coupling().has_value());
  c.set("nucleus", "on");
  CHECK(c.coupling()->a_perp == 29);
  CHECK(c.settings().ensemble_nodes == 64);
  c.set("ensemble_nodes", "0");
  CHECK_THROWS_AS(c.settings(), ConfigError);
}
