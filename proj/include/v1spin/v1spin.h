/* Copyright 2026 The v1spin Authors
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

/* C interface to libv1spin.
 *
 * Every function returns a status code. On failure the message is available
 * from v1spin_last_error() on the calling thread until the next call.
 * Strings handed out by the library are released with v1spin_string_free().
 */

#ifndef V1SPIN_V1SPIN_H
#define V1SPIN_V1SPIN_H

#include <stddef.h>

#if defined(V1SPIN_BUILDING_LIBRARY)
#define V1SPIN_API __attribute__((visibility("default")))
#else
#define V1SPIN_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

enum v1spin_status {
  V1SPIN_OK = 0,
  V1SPIN_ERR_INTERNAL = 1,
  V1SPIN_ERR_CONFIG = 2,
  V1SPIN_ERR_SOLVER = 3,
  V1SPIN_ERR_PARSE = 4,
  V1SPIN_ERR_FIT = 5
};

typedef struct v1spin_config v1spin_config;
typedef struct v1spin_trace v1spin_trace;

V1SPIN_API const char* v1spin_version(void);
V1SPIN_API const char* v1spin_last_error(void);
/* 1-based line and column of the last parse error, 0 if unknown. */
V1SPIN_API size_t v1spin_last_error_line(void);
V1SPIN_API size_t v1spin_last_error_column(void);
V1SPIN_API void v1spin_string_free(char* s);

/* Configuration. preset may be NULL for main_text. */
V1SPIN_API int v1spin_config_new(const char* preset, v1spin_config** out);
V1SPIN_API void v1spin_config_free(v1spin_config* cfg);
V1SPIN_API int v1spin_config_set(v1spin_config* cfg, const char* key, const char* value);
/* "key=value" */
V1SPIN_API int v1spin_config_assign(v1spin_config* cfg, const char* assignment);
/* Flat key = value text, or a JSON object / sidecar. */
V1SPIN_API int v1spin_config_load(v1spin_config* cfg, const char* path);
V1SPIN_API int v1spin_config_get(const v1spin_config* cfg, const char* key, char** value);
/* All resolved keys as flat text. */
V1SPIN_API int v1spin_config_dump(const v1spin_config* cfg, char** text);
/* One line per key: name, native unit, help. */
V1SPIN_API int v1spin_config_describe(char** text);

/* Simulation. kind: ple, odmr, rabi, fid, echo, pumping, linewidth, a2a1. */
V1SPIN_API int v1spin_simulate(const v1spin_config* cfg, const char* kind, v1spin_trace** out);
/* Executes sequence source text. */
V1SPIN_API int v1spin_run_sequence(const v1spin_config* cfg, const char* text, v1spin_trace** out);
/* Re-executes a sidecar; returns the restored configuration as well. */
V1SPIN_API int v1spin_rerun(const char* sidecar_json, v1spin_config** cfg_out, v1spin_trace** out);
/* JSON describing the run that produced a trace. sequence may be NULL. */
V1SPIN_API int v1spin_sidecar(const v1spin_config* cfg, const char* command, const char* kind,
                              const char* sequence, char** json);

/* Traces. */
V1SPIN_API void v1spin_trace_free(v1spin_trace* t);
V1SPIN_API int v1spin_trace_read_csv(const char* path, v1spin_trace** out);
V1SPIN_API int v1spin_trace_parse_csv(const char* text, v1spin_trace** out);
V1SPIN_API size_t v1spin_trace_size(const v1spin_trace* t);
/* Copies size() values into x and y; sigma may be NULL. Returns 1 in
 * *has_sigma when the trace carries uncertainties. */
V1SPIN_API int v1spin_trace_data(const v1spin_trace* t, double* x, double* y, double* sigma, int* has_sigma);
/* Value of a metadata key, or V1SPIN_ERR_CONFIG when absent. */
V1SPIN_API int v1spin_trace_meta(const v1spin_trace* t, const char* key, char** value);
/* Newline-separated warnings raised while producing the trace. */
V1SPIN_API int v1spin_trace_warnings(const v1spin_trace* t, char** text);
/* CSV or JSON according to cfg's format key; cfg NULL means CSV. */
V1SPIN_API int v1spin_trace_render(const v1spin_trace* t, const v1spin_config* cfg, char** text);

/* Fitting. kind: lorentzian, g2, rabi, decay, eseem, polarization. */
V1SPIN_API int v1spin_fit(const v1spin_config* cfg, const char* kind, const v1spin_trace* t, char** json);
/* Visibilities of the MW3 pair, the swapped MW2 pair and the MW1 pair. */
V1SPIN_API int v1spin_fit_populations(const double visibilities[3], char** json);

#ifdef __cplusplus
}
#endif

#endif /* V1SPIN_V1SPIN_H */
