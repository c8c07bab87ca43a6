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

#include "v1spin/run_config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "v1spin/default_rates.hpp"
#include "v1spin/trace_io.hpp"

namespace v1spin {

namespace {

using Kind = RunConfig::Kind;

struct Entry {
  RunConfig::KeyInfo info;
  std::string main_text;
  std::string s7;  // empty: same as main_text
};

std::string num(double v) { return format_double(v); }

Entry number(const char* name, const char* unit, double def, const char* help) {
  return {{name, Kind::number, unit, {}, help}, num(def), {}};
}

Entry number2(const char* name, const char* unit, double main, double s7, const char* help) {
  return {{name, Kind::number, unit, {}, help}, num(main), num(s7)};
}

Entry integer(const char* name, long long def, const char* help) {
  return {{name, Kind::integer, "", {}, help}, std::to_string(def), {}};
}

Entry choice(const char* name, std::vector<std::string> choices, const char* help) {
  std::string def = choices.front();
  return {{name, Kind::choice, "", std::move(choices), help}, def, {}};
}

const std::vector<Entry>& registry() {
  static const std::vector<Entry> r = [] {
    const auto mt = spincore::SpinSystem::main_text();
    const auto s7 = spincore::SpinSystem::s7();
    std::vector<Entry> e{
        choice("format", {"csv", "json"}, "output format"),
        // spin system
        number2("d_gs", "MHz", mt.d_gs, s7.d_gs, "half the ground-state splitting"),
        number2("d_es", "MHz", mt.d_es, s7.d_es, "half the excited-state splitting"),
        number("g_gs", "", mt.g_gs, "ground-state g factor"),
        number("g_es", "", mt.g_es, "excited-state g factor"),
        number("b0", "G", mt.b0, "axial field"),
        number("mu_b_over_h", "MHz/G", mt.mu_b_over_h, "Bohr magneton over h"),
        // fine-structure model
        choice("model", {"six_level", "ten_level"}, "optical model for ple and linewidth"),
        number("omega_l", "MHz", defaults::kOmegaL, "laser Rabi frequency"),
        number("delta_l", "MHz", 0.0, "laser detuning where not swept"),
        number("gamma_r", "1/us", defaults::kGammaR, "radiative rate"),
        number("gamma_1", "1/us", defaults::kGamma1, "es1 -> ds1"),
        number("gamma_2", "1/us", defaults::kGamma2, "es2 -> ds2"),
        number("gamma_3", "1/us", defaults::kGamma3, "ds1 -> gs1"),
        number("gamma_4", "1/us", defaults::kGamma4, "ds2 -> gs2"),
        number("gamma_relax", "1/us", defaults::kGammaRelax, "ground spin relaxation"),
        number("gamma_s", "1/us", defaults::kGammaS, "doublet dephasing"),
        number("lambda", "MHz", defaults::kLambda, "doublet mixing"),
        number("mw_center", "MHz", 258.0, "broadband MW centre"),
        // s7: 2D_gs = 9 MHz puts the outer lines 9 MHz from the centre.
        number2("mw_bandwidth", "MHz", defaults::kMwBandwidth, 20.0, "broadband MW width"),
        number("mw_rate", "1/us", defaults::kMwRate, "mixing rate per driven pair"),
        // pulse sequences
        number("mw_drive_mhz", "MHz", defaults::kMwRabiMhz, "MW drive amplitude"),
        number("mw_detuning_mhz", "MHz", 0.0, "MW carrier detuning"),
        number("t2star_us", "us", defaults::kT2StarUs, "inhomogeneous dephasing time, 0 disables"),
        number("t2_us", "us", defaults::kT2Us, "echo decay time, 0 disables"),
        number("t2_stretch", "", defaults::kEchoStretch, "echo decay exponent"),
        number("mw_mixing_rate", "1/us", defaults::kMwRate, "rate for 'with MWk' during lasers"),
        number("offres_rate", "1/us", 0.25, "OFFRES depolarizing rate"),
        number("settle_us", "us", 2.0, "dark settle after each optical step"),
        integer("ensemble_nodes", 64, "quadrature nodes for T2*"),
        // nucleus
        choice("nucleus", {"on", "off"}, "couple one spin-1/2 nucleus"),
        number("a_par", "kHz", 10.0, "secular hyperfine"),
        number("a_perp", "kHz", 29.0, "pseudo-secular hyperfine"),
        number("omega_i", "kHz", 77.9, "nuclear Larmor frequency"),
        // grids
        number("ple_min", "MHz", -700, "laser detuning start"),
        number("ple_max", "MHz", 700, "laser detuning stop"),
        integer("ple_points", 1401, "PLE grid points"),
        number("odmr_min", "MHz", 250, "MW frequency start"),
        number("odmr_max", "MHz", 266, "MW frequency stop"),
        integer("odmr_points", 1601, "ODMR grid points"),
        number("odmr_drive", "MHz", 0.05, "CW MW drive"),
        choice("odmr_init", {"a2_mw3", "a2"}, "initialization before CW ODMR"),
        number("odmr_init_us", "us", 40, "initialization duration"),
        choice("rabi_channel", {"MW1", "MW2", "MW3"}, "driven pair"),
        number("rabi_t_max", "us", 10, "longest pulse"),
        integer("rabi_points", 101, "Rabi grid points"),
        number("fid_tau_max", "us", 100, "longest free evolution"),
        integer("fid_points", 101, "FID grid points"),
        number("echo_tau_max", "us", 200, "longest half echo time"),
        integer("echo_points", 401, "echo grid points"),
        number("pumping_t_max", "us", 80, "longest pumping time"),
        integer("pumping_points", 81, "pumping grid points"),
        number("linewidth_min", "MHz", 0.01, "weakest laser drive"),
        number("linewidth_max", "MHz", 20, "strongest laser drive"),
        integer("linewidth_points", 21, "linewidth grid points"),
        number("a2a1_min", "MHz", 252, "MW centre start"),
        number("a2a1_max", "MHz", 272, "MW centre stop"),
        integer("a2a1_points", 21, "A2/A1 grid points"),
        // output and noise
        choice("observable", {"signal", "p+3/2", "p+1/2", "p-1/2", "p-3/2"},
               "sequence output column; pumping reads signal as p-1/2"),
        number("noise_counts", "", 0, "photon counts per point for shot noise, 0 disables"),
        integer("seed", 0, "noise seed"),
        // fits
        integer("peaks", 2, "Lorentzian peak count"),
        choice("decay_kind", {"stretched_echo", "gaussian_fid", "exponential"}, "decay model"),
        choice("normalize", {"none", "divide", "subtract"}, "echo normalization before ESEEM fit"),
    };
    return e;
  }();
  return r;
}

const Entry& entry(const std::string& key) {
  for (const auto& e : registry())
    if (e.info.name == key) return e;
  throw ConfigError("unknown configuration key '" + key + "'");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

// Scale from a suffix to the SI base of its quantity.
bool suffix_scale(const std::string& suffix, const std::string& quantity, double& scale) {
  static const std::map<std::string, std::pair<std::string, double>> table{
      {"hz", {"frequency", 1.0}},  {"khz", {"frequency", 1e3}}, {"mhz", {"frequency", 1e6}},
      {"ghz", {"frequency", 1e9}}, {"ns", {"time", 1e-9}},       {"us", {"time", 1e-6}},
      {"ms", {"time", 1e-3}},      {"s", {"time", 1.0}},         {"g", {"field", 1.0}},
      {"mt", {"field", 10.0}},
  };
  const auto it = table.find(lower(suffix));
  if (it == table.end() || it->second.first != quantity) return false;
  scale = it->second.second;
  return true;
}

std::string quantity_of(const std::string& unit, double& native_scale) {
  if (suffix_scale(unit, "frequency", native_scale)) return "frequency";
  if (suffix_scale(unit, "time", native_scale)) return "time";
  if (suffix_scale(unit, "field", native_scale)) return "field";
  native_scale = 1;
  return {};
}

}  // namespace

double parse_quantity(const std::string& text, const std::string& native_unit) {
  const std::string t = trim(text);
  double v = 0;
  const char* b = t.data();
  const char* e = b + t.size();
  if (b != e && *b == '+') ++b;
  auto [ptr, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || ptr == b) throw ConfigError("malformed number '" + text + "'");
  const std::string suffix = trim(std::string(ptr, e));
  if (!std::isfinite(v)) throw ConfigError("value must be finite: '" + text + "'");
  if (suffix.empty()) return v;
  double native = 1;
  const std::string q = quantity_of(native_unit, native);
  double scale = 1;
  if (q.empty() || !suffix_scale(suffix, q, scale))
    throw ConfigError("unit '" + suffix + "' does not apply here" +
                      (native_unit.empty() ? std::string() : " (expects " + native_unit + ")"));
  return v * (scale / native);
}

RunConfig::RunConfig(const std::string& preset) { set("preset", preset); }

const std::vector<RunConfig::KeyInfo>& RunConfig::keys() {
  static const std::vector<KeyInfo> k = [] {
    std::vector<KeyInfo> out;
    for (const auto& e : registry()) out.push_back(e.info);
    return out;
  }();
  return k;
}

const std::vector<std::string>& RunConfig::presets() {
  static const std::vector<std::string> p{"main_text", "s7"};
  return p;
}

bool RunConfig::known(const std::string& key) {
  if (key == "preset") return true;
  for (const auto& e : registry())
    if (e.info.name == key) return true;
  return false;
}

void RunConfig::set(const std::string& key_in, const std::string& value_in) {
  const std::string key = trim(key_in);
  const std::string value = trim(value_in);
  if (key == "preset") {
    if (std::find(presets().begin(), presets().end(), value) == presets().end())
      throw ConfigError("unknown preset '" + value + "' (main_text, s7)");
    preset_ = value;
    values_.clear();
    for (const auto& e : registry())
      values_[e.info.name] = (value == "s7" && !e.s7.empty()) ? e.s7 : e.main_text;
    return;
  }
  const Entry& e = entry(key);
  try {
    switch (e.info.kind) {
      case Kind::number:
        values_[key] = format_double(parse_quantity(value, e.info.unit));
        break;
      case Kind::integer: {
        long long n = 0;
        auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), n);
        if (ec != std::errc() || ptr != value.data() + value.size() || value.empty())
          throw ConfigError("expected an integer, got '" + value + "'");
        values_[key] = std::to_string(n);
        break;
      }
      case Kind::choice: {
        std::string v = value;
        // Channel shorthands: "2" for MW2.
        if (key == "rabi_channel" && v.size() == 1) v = "MW" + v;
        for (const auto& c : e.info.choices)
          if (lower(c) == lower(v)) {
            values_[key] = c;
            return;
          }
        std::string all;
        for (const auto& c : e.info.choices) all += (all.empty() ? "" : ", ") + c;
        throw ConfigError("expected one of " + all + ", got '" + value + "'");
      }
      case Kind::text:
        values_[key] = value;
        break;
    }
  } catch (const ConfigError& err) {
    throw ConfigError(key + ": " + err.what());
  }
}

void RunConfig::set_assignment(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("expected key=value, got '" + assignment + "'");
  set(assignment.substr(0, eq), assignment.substr(eq + 1));
}

std::string RunConfig::get(const std::string& key) const {
  if (key == "preset") return preset_;
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown configuration key '" + key + "'");
  return it->second;
}

double RunConfig::number(const std::string& key) const {
  double v = 0;
  if (!io::parse_number(get(key), v)) throw ConfigError(key + ": not a number");
  return v;
}

long long RunConfig::integer(const std::string& key) const {
  const std::string s = get(key);
  long long n = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), n);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw ConfigError(key + ": not an integer");
  return n;
}

std::uint64_t RunConfig::seed() const {
  const long long s = integer("seed");
  if (s < 0) throw ConfigError("seed: must be >= 0");
  return static_cast<std::uint64_t>(s);
}

void RunConfig::load_text(const std::string& text) {
  std::istringstream in(text);
  std::string raw;
  std::size_t line = 0;
  std::vector<std::pair<std::size_t, std::string>> assignments;
  std::string preset;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line) + ": expected key = value");
    if (trim(s.substr(0, eq)) == "preset")
      preset = trim(s.substr(eq + 1));
    else
      assignments.emplace_back(line, s);
  }
  if (!preset.empty()) set("preset", preset);
  for (const auto& [n, s] : assignments) {
    try {
      set_assignment(s);
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(n) + ": " + e.what());
    }
  }
}

void RunConfig::load_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("invalid JSON config: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("JSON config must be an object");
  const nlohmann::json& params = j.contains("params") ? j["params"] : j;
  if (!params.is_object()) throw ConfigError("JSON config: 'params' must be an object");
  auto as_string = [](const nlohmann::json& v) -> std::string {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    if (v.is_number()) return format_double(v.get<double>());
    throw ConfigError("JSON config values must be strings or numbers");
  };
  if (j.contains("preset")) set("preset", as_string(j["preset"]));
  if (params.contains("preset")) set("preset", as_string(params["preset"]));
  for (const auto& [k, v] : params.items()) {
    if (k == "preset") continue;
    set(k, as_string(v));
  }
}

void RunConfig::load_file(const std::string& path) {
  const std::string text = io::read_text_file(path);
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{')
    load_json(text);
  else
    load_text(text);
}

std::vector<std::pair<std::string, std::string>> RunConfig::entries() const {
  std::vector<std::pair<std::string, std::string>> out{{"preset", preset_}};
  for (const auto& e : registry()) out.emplace_back(e.info.name, values_.at(e.info.name));
  return out;
}

std::string RunConfig::to_text() const {
  std::string out;
  for (const auto& [k, v] : entries()) out += k + " = " + v + "\n";
  return out;
}

spincore::SpinSystem RunConfig::spin_system() const {
  spincore::SpinSystem s;
  s.d_gs = number("d_gs");
  s.d_es = number("d_es");
  s.g_gs = number("g_gs");
  s.g_es = number("g_es");
  s.b0 = number("b0");
  s.mu_b_over_h = number("mu_b_over_h");
  s.validate();
  return s;
}

lindblad::FineStructureModel RunConfig::model() const {
  const auto sys = spin_system();
  lindblad::FineStructureModel m;
  m.variant = get("model") == "ten_level" ? lindblad::Variant::ten_level : lindblad::Variant::six_level;
  m.d_gs = sys.d_gs;
  m.d_es = sys.d_es;
  m.b0 = sys.b0;
  m.g = sys.g_gs;
  m.mu_b_over_h = sys.mu_b_over_h;
  m.omega_l = number("omega_l");
  m.delta_l = number("delta_l");
  m.gamma_r = number("gamma_r");
  m.gamma_1 = number("gamma_1");
  m.gamma_2 = number("gamma_2");
  m.gamma_3 = number("gamma_3");
  m.gamma_4 = number("gamma_4");
  m.gamma_relax = number("gamma_relax");
  m.gamma_s = number("gamma_s");
  m.lambda = number("lambda");
  m.validate();
  return m;
}

lindblad::MwScheme RunConfig::scheme() const {
  lindblad::MwScheme s;
  s.center = number("mw_center");
  s.bandwidth = number("mw_bandwidth");
  s.rate = number("mw_rate");
  s.validate();
  return s;
}

pulsesim::SequenceSettings RunConfig::settings() const {
  pulsesim::SequenceSettings s;
  s.mw_drive_mhz = number("mw_drive_mhz");
  s.mw_detuning_mhz = number("mw_detuning_mhz");
  s.t2star_us = number("t2star_us");
  s.t2_us = number("t2_us");
  s.t2_stretch = number("t2_stretch");
  s.mw_mixing_rate = number("mw_mixing_rate");
  s.offres_rate = number("offres_rate");
  s.settle_us = number("settle_us");
  const long long nodes = integer("ensemble_nodes");
  if (nodes < 1 || nodes > 512) throw ConfigError("ensemble_nodes: must be in 1..512");
  s.ensemble_nodes = static_cast<int>(nodes);
  s.validate();
  return s;
}

std::optional<pulsesim::NuclearCoupling> RunConfig::coupling() const {
  if (get("nucleus") == "off") return std::nullopt;
  pulsesim::NuclearCoupling c;
  c.a_par = number("a_par");
  c.a_perp = number("a_perp");
  c.omega_i = number("omega_i");
  c.validate();
  return c;
}

}  // namespace v1spin
