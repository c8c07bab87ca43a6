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

// Fine-structure master equation for the optically driven defect.
//
// Units: Hamiltonian parameters (D, delta_L, Omega_L, lambda) in MHz (cycles);
// rates in 1/us; time in us. The Liouvillian carries the 2*pi so that
// d vec(rho)/dt = L vec(rho) with t in us.
//
// Level order
//   six_level: gs1 gs2 es1 es2 ds1 ds2   (index 1 = |m|=1/2, 2 = |m|=3/2)
//   ten_level: gs(+3/2 +1/2 -1/2 -3/2) es(+3/2 +1/2 -1/2 -3/2) ds1 ds2
//
// vec() is column-stacking: vec(rho)[i + n*j] = rho(i, j).

#include <array>
#include <span>
#include <string>
#include <vector>

#include "v1spin/common.hpp"

namespace v1spin::lindblad {

enum class Variant { six_level, ten_level };

/// Symmetric incoherent mixing between two ground levels (indices within the
/// ground block).
struct PairRate {
  int a = 0;
  int b = 0;
  double rate = 0;
};

struct FineStructureModel {
  Variant variant = Variant::six_level;
  double d_gs = 2.25;
  double d_es = 492.5;
  double omega_l = 5.0;
  double delta_l = 0.0;
  double gamma_r = 0.0;
  double gamma_1 = 0.0;
  double gamma_2 = 0.0;
  double gamma_3 = 0.0;
  double gamma_4 = 0.0;
  double gamma_relax = 0.0;  // ground-state spin relaxation, gamma_R
  double gamma_s = 0.0;      // doublet dephasing
  double lambda = 0.0;       // coherent ds1 <-> ds2 mixing, MHz
  // ten_level only
  double b0 = 92.0;
  double g = 2.0028;
  double mu_b_over_h = constants::kMuBOverH;
  std::vector<PairRate> mw_mixing;

  /// Rates from default_rates.hpp applied to the requested variant.
  static FineStructureModel defaults(Variant variant = Variant::six_level);

  std::size_t dim() const { return variant == Variant::six_level ? 6 : 10; }
  int gs_count() const { return variant == Variant::six_level ? 2 : 4; }
  int gs(int i) const { return i; }
  int es(int i) const { return gs_count() + i; }
  int ds1() const { return 2 * gs_count(); }
  int ds2() const { return 2 * gs_count() + 1; }
  /// True when ground index i belongs to the |m| = 3/2 manifold.
  bool three_halves(int gs_index) const;
  /// m_S of a ten_level ground index.
  double projection(int gs_index) const;

  /// Detuning at which the |m|=1/2 (A1) or |m|=3/2 (A2) pair is resonant.
  double a1_resonance() const { return -(d_es - d_gs); }
  double a2_resonance() const { return d_es - d_gs; }
  /// Resonance of the optical line at higher laser frequency.
  double upper_line() const { return std::max(a1_resonance(), a2_resonance()); }

  double mixing_rate(int a, int b) const;
  void set_mixing(int a, int b, double rate);
  /// Ground pair driven by MW channel 1..3 (ten_level).
  static std::array<int, 2> mw_pair(int channel);

  std::string level_name(int index) const;
  void validate() const;
};

/// Broadband continuous microwave used for the peak-ratio schemes.
struct MwScheme {
  double center = 258.0;     // MHz
  double bandwidth = 10.0;   // MHz
  double rate = 5.0;         // effective mixing rate per driven pair, 1/us
  void validate() const;
};

struct JumpOperator {
  std::string name;
  double rate = 0;
  CMat op;
};

/// Rotating-frame Hamiltonian, MHz.
CMat build_hamiltonian(const FineStructureModel& model);
std::vector<JumpOperator> jump_operators(const FineStructureModel& model);
/// N^2 x N^2 superoperator, 1/us.
CMat build_liouvillian(const FineStructureModel& model);

CVec vec(const CMat& rho);
CMat unvec(const CVec& v, std::size_t n);

struct StateCheck {
  double hermiticity = 0;    // max |rho - rho^dagger|
  double trace_error = 0;    // |tr rho - 1|
  double min_eigenvalue = 0;
  bool ok = true;
};

/// Checks hermiticity 1e-10, unit trace 1e-10, eigenvalues >= -1e-9.
StateCheck check_state(const CMat& rho);

/// Every state returned from this module (and pulsesim) is recorded here.
struct AuditCounters {
  std::size_t checked = 0;
  std::size_t violations = 0;
  double worst_trace_error = 0;
  double worst_hermiticity = 0;
  double worst_min_eigenvalue = 0;
};
void audit_state(const CMat& rho);
AuditCounters audit_counters();
void reset_audit();

/// Unit-trace null vector of the Liouvillian. Throws SolverError if the null
/// space is degenerate.
CMat steady_state(const FineStructureModel& model);
CMat steady_state(const CMat& liouvillian, std::size_t n,
                  const FineStructureModel* names_from = nullptr);

struct EvolveOptions {
  double step_fraction = 1.0 / 50.0;
  std::size_t max_steps = 20'000'000;
};

/// Fixed-step RK4 on vec(rho). States at each t_grid point (t_grid[0] is the
/// start time and returns rho0).
std::vector<CMat> evolve(const FineStructureModel& model, const CMat& rho0,
                         std::span<const double> t_grid, const EvolveOptions& options = {});
std::vector<CMat> evolve(const CMat& liouvillian, const CMat& rho0,
                         std::span<const double> t_grid, const EvolveOptions& options = {});

/// exp(L t) for piecewise-constant segments.
CMat propagator(const CMat& liouvillian, double t);
/// Integral_0^t exp(L s) ds.
CMat integrated_propagator(const CMat& liouvillian, double t);

/// Ground/excited populations summed over excited levels.
double excited_population(const FineStructureModel& model, const CMat& rho);

/// PLE: steady-state excited population (optionally times gamma_r) vs delta_L.
Trace ple_spectrum(const FineStructureModel& model, std::span<const double> delta_grid,
                   bool weight_by_gamma_r = false);

/// Sets per-pair mixing for the scheme: a pair is driven iff its transition
/// frequency lies within center +- bandwidth/2.
FineStructureModel apply_scheme(const FineStructureModel& model, const MwScheme& scheme);

struct PeakFit {
  double center = 0;
  double fwhm = 0;
  double amplitude = 0;
};

/// Locates and fits the PLE peak near `resonance` with a single Lorentzian.
PeakFit fit_ple_peak(const FineStructureModel& model, double resonance);

struct PeakRatio {
  double ratio = 0;
  PeakFit a1;
  PeakFit a2;
};

PeakRatio a2_a1_ratio(const FineStructureModel& model, const MwScheme& scheme);

/// FWHM of the A2 line vs Omega_L (MHz). Failed fits yield NaN.
Trace ple_linewidth(const FineStructureModel& model, std::span<const double> omega_grid);

struct PopulationTrajectory {
  std::vector<double> t;
  std::vector<std::array<double, 4>> populations;  // +3/2, +1/2, -1/2, -3/2
};

/// A2 drive plus MW3 mixing from a depolarized ground state (ten_level).
/// Populations are read after a laser-off settle so excited and doublet
/// population has returned to the ground state.
PopulationTrajectory pumping_trajectory(const FineStructureModel& model, double mw3_rate,
                                        std::span<const double> t_grid, double settle_us = 2.0);

}  // namespace v1spin::lindblad
