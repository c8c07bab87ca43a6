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

#include "v1spin/trace_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace v1spin::io {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

[[noreturn]] void bad_row(std::size_t line, const std::string& msg) {
  throw ParseError("line " + std::to_string(line) + ": " + msg, line, 1);
}

}  // namespace

bool parse_number(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* b = s.data();
  const char* e = b + s.size();
  if (*b == '+') ++b;
  auto [ptr, ec] = std::from_chars(b, e, out);
  return ec == std::errc() && ptr == e;
}

void write_csv(const Trace& t, std::ostream& out) {
  t.validate();
  for (const auto& [k, v] : t.meta) {
    if (k.find('=') != std::string::npos || k.find('\n') != std::string::npos || v.find('\n') != std::string::npos)
      throw ConfigError("trace metadata keys may not contain '=' or newlines: " + k);
    out << "# " << k << '=' << v << '\n';
  }
  out << t.x_label << ',' << t.y_label;
  if (t.has_sigma()) out << ",sigma";
  out << '\n';
  for (std::size_t i = 0; i < t.size(); ++i) {
    out << format_double(t.x[i]) << ',' << format_double(t.y[i]);
    if (t.has_sigma()) out << ',' << format_double(t.sigma[i]);
    out << '\n';
  }
}

std::string to_csv(const Trace& t) {
  std::ostringstream os;
  write_csv(t, os);
  return os.str();
}

Trace read_csv(std::istream& in) {
  Trace t;
  std::string raw;
  std::size_t line = 0;
  std::size_t columns = 0;
  bool header = false;
  while (std::getline(in, raw)) {
    ++line;
    const std::string s = trim(raw);
    if (s.empty()) continue;
    if (s[0] == '#') {
      const std::string body = trim(s.substr(1));
      const auto eq = body.find('=');
      if (eq == std::string::npos) continue;  // free comment
      t.meta[trim(body.substr(0, eq))] = body.substr(eq + 1);
      continue;
    }
    const auto fields = split(s, ',');
    if (!header) {
      header = true;
      double probe = 0;
      if (!parse_number(fields[0], probe)) {
        if (fields.size() < 2 || fields.size() > 3) bad_row(line, "header must name 2 or 3 columns");
        t.x_label = fields[0];
        t.y_label = fields[1];
        columns = fields.size();
        continue;
      }
    }
    if (columns == 0) {
      if (fields.size() < 2 || fields.size() > 3) bad_row(line, "expected 2 or 3 columns, got " + std::to_string(fields.size()));
      columns = fields.size();
    }
    if (fields.size() != columns)
      bad_row(line, "expected " + std::to_string(columns) + " columns, got " + std::to_string(fields.size()));
    double v[3] = {0, 0, 0};
    for (std::size_t k = 0; k < columns; ++k)
      if (!parse_number(fields[k], v[k])) bad_row(line, "malformed number '" + fields[k] + "'");
    t.x.push_back(v[0]);
    t.y.push_back(v[1]);
    if (columns == 3) t.sigma.push_back(v[2]);
  }
  return t;
}

Trace parse_csv(const std::string& text) {
  std::istringstream is(text);
  return read_csv(is);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << text;
  if (!out) throw ConfigError("write failed for '" + path + "'");
}

void write_csv_file(const Trace& t, const std::string& path) { write_text_file(path, to_csv(t)); }

Trace read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  return read_csv(in);
}

std::string to_json(const Trace& t) {
  t.validate();
  nlohmann::ordered_json j;
  j["x_label"] = t.x_label;
  j["y_label"] = t.y_label;
  j["x"] = t.x;
  j["y"] = t.y;
  if (t.has_sigma()) j["sigma"] = t.sigma;
  j["meta"] = t.meta;
  return j.dump(2) + "\n";
}

Trace from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("invalid JSON trace: ") + e.what());
  }
  Trace t;
  try {
    t.x_label = j.value("x_label", "x");
    t.y_label = j.value("y_label", "y");
    t.x = j.at("x").get<std::vector<double>>();
    t.y = j.at("y").get<std::vector<double>>();
    if (j.contains("sigma")) t.sigma = j["sigma"].get<std::vector<double>>();
    if (j.contains("meta")) t.meta = j["meta"].get<std::map<std::string, std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid JSON trace: ") + e.what());
  }
  t.validate();
  return t;
}

}  // namespace v1spin::io
