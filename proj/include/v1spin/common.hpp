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

#include <cstddef>
#include <map>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace v1spin {

using cplx = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Physical constants (SI unless noted).
namespace constants {
inline constexpr double kPlanck = 6.62607015e-34;          // J s
inline constexpr double kHbar = kPlanck / kTwoPi;           // J s
inline constexpr double kPlanckEv = 4.135667696e-15;        // eV s
inline constexpr double kElementaryCharge = 1.602176634e-19;
inline constexpr double kVacuumPermittivity = 8.8541878128e-12;
inline constexpr double kSpeedOfLight = 299792458.0;
inline constexpr double kAngstrom = 1e-10;
/// Bohr magneton over Planck constant, MHz per gauss.
inline constexpr double kMuBOverH = 1.3996;
/// 29Si nuclear gyromagnetic ratio magnitude, kHz per gauss.
inline constexpr double kSi29GammaKhzPerGauss = 0.8465;
/// Electron-29Si dipolar coefficient, kHz * Angstrom^3.
inline constexpr double kEtaSiKhzA3 = 15.72e3;
}  // namespace constants

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad user input: parameters, config keys, out-of-domain arguments.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure: degenerate steady state, stiffness, singular systems.
class SolverError : public Error {
 public:
  using Error::Error;
};

/// Text that could not be parsed (CSV, DSL, config files).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0, std::size_t column = 0)
      : Error(what), line_(line), column_(column) {}
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

class FitError : public Error {
 public:
  using Error::Error;
};

/// Sampled (x, y[, sigma]) series with axis metadata; the I/O and fit currency.
struct Trace {
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> sigma;  // empty when absent
  std::string x_label = "x";
  std::string y_label = "y";
  std::map<std::string, std::string> meta;

  std::size_t size() const noexcept { return x.size(); }
  bool has_sigma() const noexcept { return !sigma.empty(); }
  void validate() const;
};

/// Evenly spaced grid with `points` samples, inclusive of both ends.
std::vector<double> linspace(double start, double stop, std::size_t points);

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double v);

}  // namespace v1spin
