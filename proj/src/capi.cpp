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

#include "v1spin/v1spin.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include "v1spin/app.hpp"
#include "v1spin/trace_io.hpp"

struct v1spin_config {
  v1spin::RunConfig cfg;
};

struct v1spin_trace {
  v1spin::app::Output out;
};

namespace {

thread_local std::string g_error;
thread_local std::size_t g_line = 0;
thread_local std::size_t g_column = 0;

void clear_error() {
  g_error.clear();
  g_line = g_column = 0;
}

// Runs f, translating exceptions into status codes.
template <class F>
int guarded(F&& f) {
  clear_error();
  try {
    f();
    return V1SPIN_OK;
  } catch (const v1spin::ParseError& e) {
    g_error = e.what();
    g_line = e.line();
    g_column = e.column();
    return V1SPIN_ERR_PARSE;
  } catch (const v1spin::ConfigError& e) {
    g_error = e.what();
    return V1SPIN_ERR_CONFIG;
  } catch (const v1spin::SolverError& e) {
    g_error = e.what();
    return V1SPIN_ERR_SOLVER;
  } catch (const v1spin::FitError& e) {
    g_error = e.what();
    return V1SPIN_ERR_FIT;
  } catch (const std::bad_alloc&) {
    g_error = "out of memory";
    return V1SPIN_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_error = e.what();
    return V1SPIN_ERR_INTERNAL;
  } catch (...) {
    g_error = "unknown error";
    return V1SPIN_ERR_INTERNAL;
  }
}

char* dup(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

void need(const void* p, const char* what) {
  if (!p) throw v1spin::ConfigError(std::string(what) + " must not be NULL");
}

}  // namespace

extern "C" {

const char* v1spin_version(void) { return v1spin::app::kVersion; }
const char* v1spin_last_error(void) { return g_error.c_str(); }
size_t v1spin_last_error_line(void) { return g_line; }
size_t v1spin_last_error_column(void) { return g_column; }
void v1spin_string_free(char* s) { std::free(s); }

int v1spin_config_new(const char* preset, v1spin_config** out) {
  return guarded([&] {
    need(out, "out");
    *out = nullptr;
    *out = new v1spin_config{v1spin::RunConfig(preset ? preset : "main_text")};
  });
}

void v1spin_config_free(v1spin_config* cfg) { delete cfg; }

int v1spin_config_set(v1spin_config* cfg, const char* key, const char* value) {
  return guarded([&] {
    need(cfg, "config");
    need(key, "key");
    need(value, "value");
    cfg->cfg.set(key, value);
  });
}

int v1spin_config_assign(v1spin_config* cfg, const char* assignment) {
  return guarded([&] {
    need(cfg, "config");
    need(assignment, "assignment");
    cfg->cfg.set_assignment(assignment);
  });
}

int v1spin_config_load(v1spin_config* cfg, const char* path) {
  return guarded([&] {
    need(cfg, "config");
    need(path, "path");
    cfg->cfg.load_file(path);
  });
}

int v1spin_config_get(const v1spin_config* cfg, const char* key, char** value) {
  return guarded([&] {
    need(cfg, "config");
    need(key, "key");
    need(value, "value");
    *value = dup(cfg->cfg.get(key));
  });
}

int v1spin_config_dump(const v1spin_config* cfg, char** text) {
  return guarded([&] {
    need(cfg, "config");
    need(text, "text");
    *text = dup(cfg->cfg.to_text());
  });
}

int v1spin_config_describe(char** text) {
  return guarded([&] {
    need(text, "text");
    std::string out;
    for (const auto& k : v1spin::RunConfig::keys()) {
      out += k.name + "\t" + (k.unit.empty() ? "-" : k.unit) + "\t" + k.help;
      if (!k.choices.empty()) {
        out += " (";
        for (std::size_t i = 0; i < k.choices.size(); ++i) out += (i ? "|" : "") + k.choices[i];
        out += ")";
      }
      out += "\n";
    }
    *text = dup(out);
  });
}

int v1spin_simulate(const v1spin_config* cfg, const char* kind, v1spin_trace** out) {
  return guarded([&] {
    need(cfg, "config");
    need(kind, "kind");
    need(out, "out");
    *out = nullptr;
    *out = new v1spin_trace{v1spin::app::simulate(kind, cfg->cfg)};
  });
}

int v1spin_run_sequence(const v1spin_config* cfg, const char* text, v1spin_trace** out) {
  return guarded([&] {
    need(cfg, "config");
    need(text, "text");
    need(out, "out");
    *out = nullptr;
    *out = new v1spin_trace{v1spin::app::run_sequence(text, cfg->cfg)};
  });
}

int v1spin_rerun(const char* sidecar_json, v1spin_config** cfg_out, v1spin_trace** out) {
  return guarded([&] {
    need(sidecar_json, "sidecar");
    need(out, "out");
    *out = nullptr;
    if (cfg_out) *cfg_out = nullptr;
    const auto s = v1spin::app::read_sidecar(sidecar_json);
    auto* t = new v1spin_trace{v1spin::app::rerun(s)};
    if (cfg_out) {
      try {
        *cfg_out = new v1spin_config{s.config};
      } catch (...) {
        delete t;
        throw;
      }
    }
    *out = t;
  });
}

int v1spin_sidecar(const v1spin_config* cfg, const char* command, const char* kind, const char* sequence,
                   char** json) {
  return guarded([&] {
    need(cfg, "config");
    need(command, "command");
    need(json, "json");
    *json = dup(v1spin::app::sidecar_json(command, kind ? kind : "", sequence ? sequence : "", cfg->cfg));
  });
}

void v1spin_trace_free(v1spin_trace* t) { delete t; }

int v1spin_trace_read_csv(const char* path, v1spin_trace** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = nullptr;
    *out = new v1spin_trace{{v1spin::io::read_csv_file(path), {}}};
  });
}

int v1spin_trace_parse_csv(const char* text, v1spin_trace** out) {
  return guarded([&] {
    need(text, "text");
    need(out, "out");
    *out = nullptr;
    *out = new v1spin_trace{{v1spin::io::parse_csv(text), {}}};
  });
}

size_t v1spin_trace_size(const v1spin_trace* t) { return t ? t->out.trace.size() : 0; }

int v1spin_trace_data(const v1spin_trace* t, double* x, double* y, double* sigma, int* has_sigma) {
  return guarded([&] {
    need(t, "trace");
    const auto& tr = t->out.trace;
    if (x) std::copy(tr.x.begin(), tr.x.end(), x);
    if (y) std::copy(tr.y.begin(), tr.y.end(), y);
    if (sigma && tr.has_sigma()) std::copy(tr.sigma.begin(), tr.sigma.end(), sigma);
    if (has_sigma) *has_sigma = tr.has_sigma() ? 1 : 0;
  });
}

int v1spin_trace_meta(const v1spin_trace* t, const char* key, char** value) {
  return guarded([&] {
    need(t, "trace");
    need(key, "key");
    need(value, "value");
    const auto it = t->out.trace.meta.find(key);
    if (it == t->out.trace.meta.end()) throw v1spin::ConfigError(std::string("no metadata key '") + key + "'");
    *value = dup(it->second);
  });
}

int v1spin_trace_warnings(const v1spin_trace* t, char** text) {
  return guarded([&] {
    need(t, "trace");
    need(text, "text");
    std::string s;
    for (const auto& w : t->out.warnings) s += w + "\n";
    *text = dup(s);
  });
}

int v1spin_trace_render(const v1spin_trace* t, const v1spin_config* cfg, char** text) {
  return guarded([&] {
    need(t, "trace");
    need(text, "text");
    *text = dup(cfg ? v1spin::app::render(t->out.trace, cfg->cfg) : v1spin::io::to_csv(t->out.trace));
  });
}

int v1spin_fit(const v1spin_config* cfg, const char* kind, const v1spin_trace* t, char** json) {
  return guarded([&] {
    need(cfg, "config");
    need(kind, "kind");
    need(t, "trace");
    need(json, "json");
    *json = dup(v1spin::app::fit(kind, t->out.trace, cfg->cfg));
  });
}

int v1spin_fit_populations(const double visibilities[3], char** json) {
  return guarded([&] {
    need(visibilities, "visibilities");
    need(json, "json");
    *json = dup(v1spin::app::fit_populations({visibilities[0], visibilities[1], visibilities[2]}));
  });
}

}  // extern "C"
