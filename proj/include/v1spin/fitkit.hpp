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

// Damped least squares (Levenberg-Marquardt) and the model fits built on it.
// All fits are deterministic: fixed seeds, fixed iteration policy.

#include <array>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "v1spin/common.hpp"

namespace v1spin::fitkit {

struct FitResult {
  std::vector<std::string> names;
  std::vector<std::string> units;
  std::vector<double> values;
  std::vector<double> errors;  // empty when J^T J is rank deficient
  double rss = 0;
  bool converged = false;
  int iterations = 0;
  std::map<std::string, double> derived;
  std::vector<std::string> flags;

  double value(const std::string& name) const;
  double error(const std::string& name) const;
  bool has_flag(const std::string& flag) const;
};

/// f(x, p) and optionally df/dp at x.
using ModelFn = std::function<double(double, std::span<const double>)>;
using GradientFn = std::function<void(double, std::span<const double>, std::span<double>)>;

struct LmProblem {
  std::span<const double> x;
  std::span<const double> y;
  std::span<const double> sigma;  // optional weights 1/sigma^2
  ModelFn model;
  GradientFn gradient;            // empty -> central differences
  std::vector<double> p0;
  std::vector<double> scale;      // typical magnitude per parameter (FD step)
};

struct LmOptions {
  int max_iterations = 1000;
  double lambda0 = 1e-3;
  double ftol = 1e-15;   // relative RSS decrease
  double xtol = 1e-15;   // relative step
  double gtol = 1e-18;   // gradient infinity norm, scaled
};

struct LmSolution {
  std::vector<double> p;
  std::vector<double> errors;
  double rss = 0;
  bool converged = false;
  int iterations = 0;
};

LmSolution levenberg_marquardt(const LmProblem& problem, const LmOptions& options = {});

/// Central-difference Jacobian, rows = samples. Step 1e-6 * scale.
std::vector<std::vector<double>> numeric_jacobian(const LmProblem& problem,
                                                  std::span<const double> p);

// ---- Lorentzian -----------------------------------------------------------

/// offset + sum_k A_k g_k^2 / ((x - c_k)^2 + g_k^2), g_k = FWHM_k / 2.
double lorentzian_model(double x, std::span<const double> p);
void lorentzian_gradient(double x, std::span<const double> p, std::span<double> d);

/// Parameter order: offset, center1, fwhm1, amplitude1[, center2, fwhm2,
/// amplitude2]. A flat trace is flagged "degenerate" rather than rejected.
FitResult fit_lorentzian(const Trace& trace, int n_peaks);

// ---- g2 -------------------------------------------------------------------

/// (1 - beta e^{-|t|/tau1} - (1-beta) e^{-|t|/tau2}) / N + (N-1)/N
double g2_model(double tau, double n, double beta, double tau1, double tau2);

/// Parameters N, beta, tau1, tau2; derived g2_0. Flags "tau_degenerate".
FitResult fit_g2(const Trace& trace);
inline bool single_emitter(double g2_0) { return g2_0 < 0.5; }

// ---- populations ----------------------------------------------------------

/// Fringe visibilities of the three Rabi experiments.
struct Visibilities {
  double v_32_12 = 0;    // +3/2 <-> +1/2 (MW3)
  double v_12_m12 = 0;   // +1/2 <-> -1/2 (MW2, swapped)
  double v_m12_m32 = 0;  // -1/2 <-> -3/2 (MW1)
};

/// Order (p_-3/2, p_-1/2, p_+1/2, p_+3/2).
using Populations = std::array<double, 4>;

struct PopulationEstimate {
  Populations p{};
  double condition = 0;
  bool ordering_ok = true;
};

/// Raised on a singular system or broken ordering; carries the unconstrained
/// solution.
class PopulationError : public FitError {
 public:
  PopulationError(const std::string& what, PopulationEstimate estimate)
      : FitError(what), estimate_(estimate) {}
  const PopulationEstimate& estimate() const noexcept { return estimate_; }

 private:
  PopulationEstimate estimate_;
};

Visibilities visibilities_from_populations(const Populations& p);

/// Solves the three rearranged visibility equations plus normalization.
/// Condition numbers above 1e10 and ordering violations
/// (max(p_-3/2, p_+3/2) <= p_+1/2 <= p_-1/2 within 1e-9) throw.
PopulationEstimate populations_from_visibilities(const Visibilities& v);
/// Same solve without the ordering check.
PopulationEstimate solve_populations(const Visibilities& v);

// ---- Rabi -----------------------------------------------------------------

/// offset + amplitude cos(2 pi f t + phase). Parameters frequency, amplitude,
/// phase, offset; derived visibility = amplitude / offset.
FitResult fit_rabi(const Trace& trace);

// ---- decays ---------------------------------------------------------------

enum class DecayKind { gaussian_fid, stretched_echo, exponential };

DecayKind decay_kind_from_string(const std::string& s);
std::string to_string(DecayKind kind);

/// A exp(-(t/T)^n); n = 2, free, 1. Parameters amplitude, T[, n].
FitResult fit_decay(const Trace& trace, DecayKind kind);

// ---- polarization ---------------------------------------------------------

/// A cos^2(2 (phi - phi0)) + C with phi in degrees. Parameters A, phi0, C;
/// derived contrast = A / (A + 2C).
FitResult fit_polarization(std::span<const double> angles_deg,
                           std::span<const double> intensities);

}  // namespace v1spin::fitkit
