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

#include "v1spin/common.hpp"

#include <array>
#include <charconv>
#include <cmath>

namespace v1spin {

void Trace::validate() const {
  if (x.size() != y.size()) throw ConfigError("trace: x and y lengths differ");
  if (!sigma.empty() && sigma.size() != x.size())
    throw ConfigError("trace: sigma length differs from x");
}

std::vector<double> linspace(double start, double stop, std::size_t points) {
  std::vector<double> out(points);
  if (points == 1) {
    out[0] = start;
    return out;
  }
  const double step = (stop - start) / static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i) out[i] = start + step * static_cast<double>(i);
  if (points > 1) out.back() = stop;
  return out;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 64> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

}  // namespace v1spin
