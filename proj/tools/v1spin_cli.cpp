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

// v1spin command-line tool. Talks to the library only through v1spin.h.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "v1spin/v1spin.h"

namespace {

struct Failure {
  int code;
  std::string message;
};

void check(int status, const std::string& context = {}) {
  if (status == V1SPIN_OK) return;
  std::string msg = v1spin_last_error();
  if (!context.empty()) msg = context + ": " + msg;
  throw Failure{status, msg};
}

struct ConfigDeleter {
  void operator()(v1spin_config* c) const { v1spin_config_free(c); }
};
struct TraceDeleter {
  void operator()(v1spin_trace* t) const { v1spin_trace_free(t); }
};
using ConfigPtr = std::unique_ptr<v1spin_config, ConfigDeleter>;
using TracePtr = std::unique_ptr<v1spin_trace, TraceDeleter>;

std::string take(char* s) {
  std::string out = s ? s : "";
  v1spin_string_free(s);
  return out;
}

std::string read_file(const std::string& path) {
  if (path == "-") {
    std::ostringstream ss;
    ss << std::cin.rdbuf();
    return ss.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{V1SPIN_ERR_CONFIG, "cannot open '" + path + "'"};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Failure{V1SPIN_ERR_CONFIG, "cannot write '" + path + "'"};
}

std::string sidecar_path(const std::string& out) { return out + ".sidecar.json"; }

// Options shared by every command that builds a configuration.
struct Common {
  std::string preset = "main_text";
  std::string config;
  std::vector<std::string> sets;
  std::string out;
  std::vector<std::pair<std::string, std::optional<std::string>>> shortcuts;

  void add(CLI::App* cmd) {
    cmd->add_option("--preset", preset, "parameter preset")->check(CLI::IsMember({"main_text", "s7"}));
    cmd->add_option("--config", config, "flat key = value file or JSON sidecar");
    cmd->add_option("--set", sets, "override, key=value (repeatable)");
    cmd->add_option("--out", out, "output file (default: standard output)");
  }

  void shortcut(CLI::App* cmd, const std::string& flag, const std::string& key, const std::string& help) {
    shortcuts.emplace_back(key, std::nullopt);
    cmd->add_option_function<std::string>(
        flag, [this, key](const std::string& v) {
          for (auto& [k, val] : shortcuts)
            if (k == key) val = v;
        },
        help);
  }

  ConfigPtr build() const {
    v1spin_config* raw = nullptr;
    check(v1spin_config_new(preset.c_str(), &raw));
    ConfigPtr cfg(raw);
    if (!config.empty()) check(v1spin_config_load(cfg.get(), config.c_str()), config);
    for (const auto& [k, v] : shortcuts)
      if (v) check(v1spin_config_set(cfg.get(), k.c_str(), v->c_str()));
    for (const auto& s : sets) check(v1spin_config_assign(cfg.get(), s.c_str()));
    return cfg;
  }
};

void emit_trace(const v1spin_trace* t, const v1spin_config* cfg, const std::string& out, const std::string& sidecar) {
  const std::string text = take([&] {
    char* s = nullptr;
    check(v1spin_trace_render(t, cfg, &s));
    return s;
  }());
  const std::string warnings = take([&] {
    char* s = nullptr;
    check(v1spin_trace_warnings(t, &s));
    return s;
  }());
  std::istringstream ws(warnings);
  for (std::string w; std::getline(ws, w);) std::cerr << "warning: " << w << "\n";
  if (out.empty()) {
    std::cout << text;
    return;
  }
  write_file(out, text);
  write_file(sidecar_path(out), sidecar);
}

std::string make_sidecar(const v1spin_config* cfg, const std::string& command, const std::string& kind,
                         const std::string& sequence) {
  char* s = nullptr;
  check(v1spin_sidecar(cfg, command.c_str(), kind.c_str(), sequence.empty() ? nullptr : sequence.c_str(), &s));
  return take(s);
}

void emit_text(const std::string& text, const std::string& out) {
  if (out.empty())
    std::cout << text;
  else
    write_file(out, text);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"v1spin: spin dynamics and fitting for silicon-vacancy centres"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(v1spin_version()));

  // simulate
  Common sim;
  std::string sim_kind;
  auto* simulate = app.add_subcommand("simulate", "simulate a spectrum or pulse experiment");
  simulate->add_option("kind", sim_kind, "ple, odmr, rabi, fid, echo, pumping, linewidth or a2a1")
      ->required()
      ->check(CLI::IsMember({"ple", "odmr", "rabi", "fid", "echo", "pumping", "linewidth", "a2a1"}));
  sim.add(simulate);

  // run
  Common run;
  std::string seq_path;
  auto* runcmd = app.add_subcommand("run", "execute a pulse-sequence file");
  runcmd->add_option("sequence", seq_path, "sequence file ('-' for standard input)")->required();
  run.add(runcmd);

  // fit
  Common fit;
  std::string fit_kind, fit_input;
  std::vector<double> visibilities;
  auto* fitcmd = app.add_subcommand("fit", "fit a model to a trace and print JSON");
  fitcmd->add_option("kind", fit_kind, "lorentzian, g2, rabi, decay, eseem, polarization or populations")
      ->required()
      ->check(CLI::IsMember({"lorentzian", "g2", "rabi", "decay", "eseem", "polarization", "populations"}));
  fitcmd->add_option("input", fit_input, "trace CSV ('-' for standard input)");
  fitcmd->add_option("--v", visibilities, "visibilities of the MW3, swapped MW2 and MW1 pairs")->expected(3);
  fit.add(fitcmd);

  for (auto& [cmd, common] : {std::pair{simulate, &sim}, std::pair{runcmd, &run}, std::pair{fitcmd, &fit}}) {
    common->shortcut(cmd, "--seed", "seed", "noise seed");
    common->shortcut(cmd, "--format", "format", "csv or json");
    common->shortcut(cmd, "--a-par", "a_par", "secular hyperfine, e.g. 10kHz");
    common->shortcut(cmd, "--a-perp", "a_perp", "pseudo-secular hyperfine, e.g. 29kHz");
    common->shortcut(cmd, "--omega-i", "omega_i", "nuclear Larmor frequency");
    common->shortcut(cmd, "--observable", "observable", "signal, p+3/2, p+1/2, p-1/2 or p-3/2");
  }
  sim.shortcut(simulate, "--channel", "rabi_channel", "MW1, MW2 or MW3");
  sim.shortcut(simulate, "--noise-counts", "noise_counts", "photon counts per point");
  sim.shortcut(simulate, "--model", "model", "six_level or ten_level");
  run.shortcut(runcmd, "--noise-counts", "noise_counts", "photon counts per point");
  fit.shortcut(fitcmd, "--peaks", "peaks", "Lorentzian peak count");
  fit.shortcut(fitcmd, "--decay", "decay_kind", "stretched_echo, gaussian_fid or exponential");
  fit.shortcut(fitcmd, "--normalize", "normalize", "none, divide or subtract");

  // rerun
  std::string rerun_path, rerun_out;
  auto* reruncmd = app.add_subcommand("rerun", "repeat the run recorded in a sidecar");
  reruncmd->add_option("sidecar", rerun_path, "sidecar JSON")->required();
  reruncmd->add_option("--out", rerun_out, "output file (default: standard output)");

  // keys
  std::string keys_preset = "main_text";
  bool describe = false;
  auto* keyscmd = app.add_subcommand("keys", "print every configuration key with its resolved value");
  keyscmd->add_option("--preset", keys_preset, "parameter preset")->check(CLI::IsMember({"main_text", "s7"}));
  keyscmd->add_flag("--describe", describe, "print units and descriptions instead");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return V1SPIN_ERR_CONFIG;
  }

  try {
    if (*simulate) {
      const ConfigPtr cfg = sim.build();
      v1spin_trace* raw = nullptr;
      check(v1spin_simulate(cfg.get(), sim_kind.c_str(), &raw));
      const TracePtr t(raw);
      emit_trace(t.get(), cfg.get(), sim.out, make_sidecar(cfg.get(), "simulate", sim_kind, ""));
    } else if (*runcmd) {
      const ConfigPtr cfg = run.build();
      const std::string text = read_file(seq_path);
      v1spin_trace* raw = nullptr;
      const int st = v1spin_run_sequence(cfg.get(), text.c_str(), &raw);
      check(st, st == V1SPIN_ERR_PARSE ? seq_path : std::string());
      const TracePtr t(raw);
      emit_trace(t.get(), cfg.get(), run.out, make_sidecar(cfg.get(), "run", "", text));
    } else if (*fitcmd) {
      const ConfigPtr cfg = fit.build();
      char* json = nullptr;
      if (fit_kind == "populations") {
        if (visibilities.size() != 3) throw Failure{V1SPIN_ERR_CONFIG, "fit populations needs --v V1 V2 V3"};
        check(v1spin_fit_populations(visibilities.data(), &json));
      } else {
        if (fit_input.empty()) throw Failure{V1SPIN_ERR_CONFIG, "fit " + fit_kind + " needs an input trace"};
        v1spin_trace* raw = nullptr;
        if (fit_input == "-")
          check(v1spin_trace_parse_csv(read_file("-").c_str(), &raw), "<stdin>");
        else
          check(v1spin_trace_read_csv(fit_input.c_str(), &raw), fit_input);
        const TracePtr t(raw);
        check(v1spin_fit(cfg.get(), fit_kind.c_str(), t.get(), &json));
      }
      emit_text(take(json), fit.out);
    } else if (*reruncmd) {
      const std::string side = read_file(rerun_path);
      v1spin_config* rc = nullptr;
      v1spin_trace* rt = nullptr;
      check(v1spin_rerun(side.c_str(), &rc, &rt), rerun_path);
      const ConfigPtr cfg(rc);
      const TracePtr t(rt);
      emit_trace(t.get(), cfg.get(), rerun_out, side);
    } else if (*keyscmd) {
      char* text = nullptr;
      if (describe) {
        check(v1spin_config_describe(&text));
      } else {
        v1spin_config* raw = nullptr;
        check(v1spin_config_new(keys_preset.c_str(), &raw));
        const ConfigPtr cfg(raw);
        check(v1spin_config_dump(cfg.get(), &text));
      }
      std::cout << take(text);
    }
  } catch (const Failure& f) {
    std::cerr << "error: " << f.message << "\n";
    return f.code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return V1SPIN_ERR_INTERNAL;
  }
  return 0;
}
