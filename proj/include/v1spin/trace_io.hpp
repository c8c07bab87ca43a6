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

// Trace files:
//
//   # key=value        metadata, one per line, sorted by key
//   x_label,y_label[,sigma]
//   1.5,0.25[,0.01]
//
// Numbers are written in the shortest form that parses back to the same
// double, so write -> read -> write is a fixpoint.

#include <iosfwd>
#include <string>

#include "v1spin/common.hpp"

namespace v1spin::io {

void write_csv(const Trace& t, std::ostream& out);
std::string to_csv(const Trace& t);

/// Throws ParseError citing the 1-based line of the offending row.
Trace read_csv(std::istream& in);
Trace parse_csv(const std::string& text);

void write_csv_file(const Trace& t, const std::string& path);
Trace read_csv_file(const std::string& path);

/// {"x_label", "y_label", "x", "y", ["sigma"], "meta"}
std::string to_json(const Trace& t);
Trace from_json(const std::string& text);

/// Parses a whole token as a double; false on trailing garbage.
bool parse_number(const std::string& s, double& out);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace v1spin::io
