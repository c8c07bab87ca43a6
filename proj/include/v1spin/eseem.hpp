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

// Two-pulse echo envelope modulation from one weakly coupled nuclear spin
// (I = 1/2) seen by the m = -3/2 / -1/2 electron pair.
//
// Units: hyperfine and nuclear frequencies in kHz (cycles), tau in
// microseconds, distances in Angstrom.

#include <limits>
#include <vector>

#include "v1spin/common.hpp"
#include "v1spin/fitkit.hpp"

namespace v1spin::eseem {

struct EseemParams {
  double a_par = 10.0;
  double a_perp = 29.0;
  double omega_i = 77.9;
  static constexpr double m_alpha = -1.5;
  static constexpr double m_beta = -0.5;

  void validate() const;
};

struct Frequencies {
  double alpha = 0;
  double beta = 0;
  double minus = 0;
  double plus = 0;
};

Frequencies modulation_frequencies(const EseemParams& p);

/// k = (2 w_a w_b / (A_perp w_I))^2; infinite when A_perp or w_I vanishes.
double modulation_depth(const EseemParams& p);

/// -<S_y> after the echo at total time 2 tau.
double envelope(const EseemParams& p, double tau_us);
Trace envelope_trace(const EseemParams& p, const std::vector<double>& tau_us);

/// 29Si Larmor frequency in kHz for a field in gauss.
double larmor_from_field(double b0_gauss);

struct SpectralPeak {
  double frequency = 0;  // kHz
  double amplitude = 0;
};

/// Hann-windowed DFT magnitude of a uniformly sampled trace (x in us).
/// Returns local maxima above `relative_floor` times the strongest one,
/// strongest first, at most `max_peaks` (0 = no limit).
std::vector<SpectralPeak> echo_spectrum(const Trace& trace, std::size_t max_peaks = 4,
                                        double relative_floor = 0.05);

struct NuclearGeometry {
  double r = 0;      // Angstrom
  double theta = 0;  // degrees from the c axis
  double eta_si = constants::kEtaSiKhzA3 * 1e-3;  // MHz * Angstrom^3

  void validate() const;
};

struct Hyperfine {
  double a_par = 0;
  double a_perp = 0;
};

Hyperfine hyperfine_from_geometry(const NuclearGeometry& g);

struct GeometryBranch {
  NuclearGeometry geometry;
  double a_par_sign = 1;  // +1: A_par taken as given, -1: sign flipped
  double residual = 0;    // relative
};

/// All (r, theta) solutions of the dipolar equations for both A_par sign
/// conventions. Throws FitError listing the best candidates when none fits.
std::vector<GeometryBranch> geometry_from_hyperfine(double a_par, double a_perp,
                                                    double tolerance = 1e-9);

enum class NormalizeMode { divide, subtract };

/// Removes a stretched-exponential echo decay exp(-(2 tau / T2)^n). Adds
/// meta keys t2_us and stretch.
Trace normalize_echo(const Trace& trace, NormalizeMode mode = NormalizeMode::divide);

/// Least squares over (A_par, A_perp) with w_I fixed. Parameters a_par,
/// a_perp; derived k and rms.
fitkit::FitResult fit_envelope(const Trace& normalized, double omega_i);

}  // namespace v1spin::eseem
