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

#include "v1spin/app.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <json.hpp>

#include "v1spin/eseem.hpp"
#include "v1spin/fitkit.hpp"
#include "v1spin/lindblad.hpp"
#include "v1spin/pulsesim.hpp"
#include "v1spin/sequence.hpp"
#include "v1spin/trace_io.hpp"

namespace v1spin::app {

namespace {

using nlohmann::ordered_json;

std::size_t points(const RunConfig& cfg, const std::string& key) {
  const long long n = cfg.integer(key);
  if (n < 1 || n > 10'000'000) throw ConfigError(key + ": must be in 1..10000000");
  return static_cast<std::size_t>(n);
}

std::vector<double> grid(const RunConfig& cfg, const std::string& prefix) {
  return linspace(cfg.number(prefix + "_min"), cfg.number(prefix + "_max"), points(cfg, prefix + "_points"));
}

int channel_number(const std::string& name) { return name.back() - '0'; }

// Index into pulsesim population order (+3/2, +1/2, -1/2, -3/2).
int population_index(const std::string& observable) {
  static const std::array<const char*, 4> names{"p+3/2", "p+1/2", "p-1/2", "p-3/2"};
  for (int i = 0; i < 4; ++i)
    if (observable == names[static_cast<std::size_t>(i)]) return i;
  return -1;
}

void add_noise(Trace& t, const RunConfig& cfg) {
  const double counts = cfg.number("noise_counts");
  if (counts < 0) throw ConfigError("noise_counts: must be >= 0");
  if (counts == 0) return;
  std::mt19937_64 rng(cfg.seed());
  t.sigma.assign(t.size(), 0.0);
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double s = std::sqrt(std::max(std::abs(t.y[i]), 1.0 / counts) / counts);
    std::normal_distribution<double> nd(0.0, s);
    t.y[i] += nd(rng);
    t.sigma[i] = s;
  }
  t.meta["noise_counts"] = format_double(counts);
  t.meta["seed"] = std::to_string(cfg.seed());
}

Output from_sequence(const pulsesim::PulseSequence& seq, const RunConfig& cfg) {
  const auto r = pulsesim::simulate_sequence(seq, cfg.spin_system(), cfg.model(), cfg.coupling(), cfg.settings());
  Output out;
  out.warnings = r.warnings;
  out.trace = r.signal;
  const std::string obs = cfg.get("observable");
  const int k = population_index(obs);
  if (k >= 0) {
    out.trace.y_label = "population_" + obs.substr(1);
    for (std::size_t i = 0; i < out.trace.size(); ++i)
      out.trace.y[i] = r.populations[i][static_cast<std::size_t>(k)];
  }
  out.trace.meta["observable"] = obs;
  out.trace.meta["warnings"] = std::to_string(r.warnings.size());
  return out;
}

Output pumping(const RunConfig& cfg) {
  const auto m = pulsesim::sequence_model(cfg.spin_system(), cfg.model());
  const auto settings = cfg.settings();
  const auto t = linspace(0, cfg.number("pumping_t_max"), points(cfg, "pumping_points"));
  const auto traj = lindblad::pumping_trajectory(m, settings.mw_mixing_rate, t, settings.settle_us);
  std::string obs = cfg.get("observable");
  if (obs == "signal") obs = "p-1/2";
  const auto k = static_cast<std::size_t>(population_index(obs));
  Output out;
  out.trace.x = traj.t;
  for (const auto& p : traj.populations) out.trace.y.push_back(p[k]);
  out.trace.x_label = "tau_init_us";
  out.trace.y_label = "population_" + obs.substr(1);
  out.trace.meta["observable"] = obs;
  return out;
}

Output odmr(const RunConfig& cfg) {
  const auto sys = cfg.spin_system();
  const auto m = pulsesim::sequence_model(sys, cfg.model());
  const double rate = cfg.get("odmr_init") == "a2_mw3" ? cfg.number("mw_mixing_rate") : 0.0;
  const double init = cfg.number("odmr_init_us");
  if (!(init >= 0)) throw ConfigError("odmr_init_us: must be >= 0");
  const std::vector<double> t{0.0, init};
  const auto traj = lindblad::pumping_trajectory(m, rate, t, cfg.number("settle_us"));
  Output out;
  out.trace = pulsesim::odmr_spectrum(sys, grid(cfg, "odmr"), cfg.number("odmr_drive"), traj.populations.back());
  out.trace.meta["odmr_init"] = cfg.get("odmr_init");
  return out;
}

Output a2a1(const RunConfig& cfg) {
  auto m = cfg.model();
  m.variant = lindblad::Variant::ten_level;
  m.mw_mixing.clear();
  auto scheme = cfg.scheme();
  Output out;
  out.trace.x_label = "mw_center_MHz";
  out.trace.y_label = "a2_a1_ratio";
  for (double c : grid(cfg, "a2a1")) {
    scheme.center = c;
    out.trace.x.push_back(c);
    out.trace.y.push_back(lindblad::a2_a1_ratio(m, scheme).ratio);
  }
  return out;
}

ordered_json fit_json(const std::string& kind, const fitkit::FitResult& r) {
  ordered_json j;
  j["model"] = kind;
  j["converged"] = r.converged;
  j["iterations"] = r.iterations;
  j["rss"] = r.rss;
  ordered_json params = ordered_json::object();
  for (std::size_t i = 0; i < r.names.size(); ++i) {
    ordered_json p;
    p["value"] = r.values[i];
    if (i < r.errors.size()) p["error"] = r.errors[i];
    if (i < r.units.size() && !r.units[i].empty()) p["unit"] = r.units[i];
    params[r.names[i]] = p;
  }
  j["parameters"] = params;
  j["derived"] = r.derived;
  j["flags"] = r.flags;
  return j;
}

}  // namespace

const std::vector<std::string>& simulate_kinds() {
  static const std::vector<std::string> k{"ple", "odmr", "rabi", "fid", "echo", "pumping", "linewidth", "a2a1"};
  return k;
}

const std::vector<std::string>& fit_kinds() {
  static const std::vector<std::string> k{"lorentzian", "g2", "rabi", "decay", "eseem", "polarization", "populations"};
  return k;
}

Output simulate(const std::string& kind, const RunConfig& cfg) {
  Output out;
  if (kind == "ple") {
    const auto m = lindblad::apply_scheme(cfg.model(), cfg.scheme());
    out.trace = lindblad::ple_spectrum(m, grid(cfg, "ple"));
  } else if (kind == "odmr") {
    out = odmr(cfg);
  } else if (kind == "rabi") {
    out = from_sequence(pulsesim::rabi_sequence(channel_number(cfg.get("rabi_channel")), cfg.number("rabi_t_max"),
                                                static_cast<int>(points(cfg, "rabi_points"))),
                        cfg);
  } else if (kind == "fid") {
    out = from_sequence(
        pulsesim::fid_sequence(cfg.number("fid_tau_max"), static_cast<int>(points(cfg, "fid_points"))), cfg);
  } else if (kind == "echo") {
    out = from_sequence(
        pulsesim::hahn_echo_sequence(cfg.number("echo_tau_max"), static_cast<int>(points(cfg, "echo_points"))), cfg);
  } else if (kind == "pumping") {
    out = pumping(cfg);
  } else if (kind == "linewidth") {
    out.trace = lindblad::ple_linewidth(cfg.model(), grid(cfg, "linewidth"));
  } else if (kind == "a2a1") {
    out = a2a1(cfg);
  } else {
    throw ConfigError("unknown simulation '" + kind + "'");
  }
  add_noise(out.trace, cfg);
  out.trace.meta["command"] = "simulate " + kind;
  out.trace.meta["preset"] = cfg.preset();
  out.trace.meta["version"] = kVersion;
  return out;
}

Output run_sequence(const std::string& text, const RunConfig& cfg) {
  const auto seq = pulsesim::parse_sequence(text);
  Output out = from_sequence(seq, cfg);
  add_noise(out.trace, cfg);
  out.trace.meta["command"] = "run";
  out.trace.meta["preset"] = cfg.preset();
  out.trace.meta["version"] = kVersion;
  return out;
}

std::string fit(const std::string& kind, const Trace& trace, const RunConfig& cfg) {
  trace.validate();
  ordered_json j;
  if (kind == "lorentzian") {
    const long long n = cfg.integer("peaks");
    if (n < 1 || n > 16) throw ConfigError("peaks: must be in 1..16");
    j = fit_json(kind, fitkit::fit_lorentzian(trace, static_cast<int>(n)));
  } else if (kind == "g2") {
    j = fit_json(kind, fitkit::fit_g2(trace));
  } else if (kind == "rabi") {
    j = fit_json(kind, fitkit::fit_rabi(trace));
  } else if (kind == "decay") {
    const auto dk = fitkit::decay_kind_from_string(cfg.get("decay_kind"));
    j = fit_json(kind, fitkit::fit_decay(trace, dk));
    j["decay_kind"] = fitkit::to_string(dk);
  } else if (kind == "eseem") {
    Trace t = trace;
    const std::string mode = cfg.get("normalize");
    if (mode != "none")
      t = eseem::normalize_echo(trace, mode == "divide" ? eseem::NormalizeMode::divide : eseem::NormalizeMode::subtract);
    const auto r = eseem::fit_envelope(t, cfg.number("omega_i"));
    j = fit_json(kind, r);
    j["normalize"] = mode;
    ordered_json branches = ordered_json::array();
    try {
      for (const auto& b : eseem::geometry_from_hyperfine(r.value("a_par"), r.value("a_perp"))) {
        ordered_json g;
        g["r_angstrom"] = b.geometry.r;
        g["theta_deg"] = b.geometry.theta;
        g["a_par_sign"] = b.a_par_sign;
        g["residual"] = b.residual;
        branches.push_back(g);
      }
    } catch (const Error&) {
      // no physical geometry for these couplings
    }
    j["geometry"] = branches;
  } else if (kind == "polarization") {
    j = fit_json(kind, fitkit::fit_polarization(trace.x, trace.y));
  } else if (kind == "populations") {
    throw ConfigError("fit populations takes visibilities, not a trace");
  } else {
    throw ConfigError("unknown fit '" + kind + "'");
  }
  return j.dump(2) + "\n";
}

std::string fit_populations(const std::array<double, 3>& v) {
  const fitkit::Visibilities vis{v[0], v[1], v[2]};
  // Ordering violations are reported in the JSON; only a singular system fails.
  const auto est = fitkit::solve_populations(vis);
  ordered_json j;
  j["model"] = "populations";
  j["visibilities"] = {{"v_32_12", v[0]}, {"v_12_m12", v[1]}, {"v_m12_m32", v[2]}};
  j["populations"] = {{"p-3/2", est.p[0]}, {"p-1/2", est.p[1]}, {"p+1/2", est.p[2]}, {"p+3/2", est.p[3]}};
  j["condition"] = est.condition;
  j["ordering_ok"] = est.ordering_ok;
  j["flags"] = est.ordering_ok ? std::vector<std::string>{} : std::vector<std::string>{"ordering_violated"};
  return j.dump(2) + "\n";
}

std::string sidecar_json(const std::string& command, const std::string& kind, const std::string& sequence_text,
                         const RunConfig& cfg) {
  ordered_json j;
  j["software"] = std::string("v1spin ") + kVersion;
  j["command"] = command;
  if (!kind.empty()) j["kind"] = kind;
  if (!sequence_text.empty()) j["sequence"] = sequence_text;
  ordered_json params;
  for (const auto& [k, v] : cfg.entries()) {
    const auto it = std::find_if(RunConfig::keys().begin(), RunConfig::keys().end(),
                                 [&](const RunConfig::KeyInfo& i) { return i.name == k; });
    if (it != RunConfig::keys().end() && it->kind == RunConfig::Kind::number)
      params[k] = cfg.number(k);
    else if (it != RunConfig::keys().end() && it->kind == RunConfig::Kind::integer)
      params[k] = cfg.integer(k);
    else
      params[k] = v;
  }
  j["params"] = params;
  return j.dump(2) + "\n";
}

Sidecar read_sidecar(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("invalid sidecar: ") + e.what());
  }
  if (!j.is_object() || !j.contains("command") || !j.contains("params"))
    throw ConfigError("sidecar needs 'command' and 'params'");
  Sidecar s;
  s.command = j["command"].get<std::string>();
  s.kind = j.value("kind", "");
  s.sequence = j.value("sequence", "");
  s.config.load_json(json_text);
  return s;
}

Output rerun(const Sidecar& s) {
  if (s.command == "simulate") return simulate(s.kind, s.config);
  if (s.command == "run") return run_sequence(s.sequence, s.config);
  throw ConfigError("sidecar command '" + s.command + "' cannot be re-run");
}

std::string render(const Trace& trace, const RunConfig& cfg) {
  return cfg.get("format") == "json" ? io::to_json(trace) : io::to_csv(trace);
}

}  // namespace v1spin::app
