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

// Spin-3/2 operator algebra, the axial ground/excited spin Hamiltonians and
// the small closed-form analysis helpers built on them.
//
// Basis order everywhere: |+3/2>, |+1/2>, |-1/2>, |-3/2>.
// Frequencies are in MHz (cycles), fields in gauss.

#include <array>

#include "v1spin/common.hpp"

namespace v1spin::spincore {

using Mat4 = Eigen::Matrix4cd;

struct SpinOperators {
  Mat4 sx;
  Mat4 sy;
  Mat4 sz;
};

/// Fixed S=3/2 matrices in the documented basis order.
const SpinOperators& spin_matrices();

/// m_S of basis index 0..3, i.e. (3/2, 1/2, -1/2, -3/2).
double projection(int index);

/// Basis index of m_S (accepts +-1.5, +-0.5).
int index_of(double m);

struct SpinSystem {
  double d_gs = 2.25;      // half of the ground-state ZFS, MHz
  double d_es = 492.5;     // half of the excited-state ZFS, MHz
  double g_gs = 2.0028;
  double g_es = 2.0033;
  double b0 = 92.0;        // axial field, gauss
  double mu_b_over_h = constants::kMuBOverH;

  /// Builds a system from the reported full splittings 2*D.
  static SpinSystem from_splittings(double two_d_gs, double two_d_es, double g_gs, double g_es,
                                    double b0);
  /// 2D_gs = 4.5 MHz, 2D_es = 985 MHz, B0 = 92 G.
  static SpinSystem main_text();
  /// Fine-structure-model variant: 2D_gs = 9 MHz, 2D_es = 975 MHz.
  static SpinSystem s7();

  double gs_zeeman() const { return g_gs * mu_b_over_h * b0; }
  double es_zeeman() const { return g_es * mu_b_over_h * b0; }
  void validate() const;
};

Mat4 gs_hamiltonian(const SpinSystem& sys);
Mat4 es_hamiltonian(const SpinSystem& sys);

/// |dm| = 1 ground-state resonances. mw1 links -1/2 <-> -3/2, mw2 links
/// +1/2 <-> -1/2, mw3 links +1/2 <-> +3/2. Values are |gaps|.
struct MwTransitions {
  double mw1 = 0;
  double mw2 = 0;
  double mw3 = 0;
  bool degenerate = false;  // B0 == 0: only the 2D_gs line survives
  bool ordered = false;     // Zeeman term exceeds 2|D_gs|, levels ordered by m

  std::array<double, 3> sorted() const;
  double of_channel(int channel) const;  // channel 1..3
};

MwTransitions mw_transition_frequencies(const SpinSystem& sys);

/// Spin-conserving optical line offsets relative to the bare gap, MHz.
struct OpticalTransitionSet {
  std::array<double, 4> offsets{};  // basis order +3/2, +1/2, -1/2, -3/2
  double delta_e_ev = 1.44;

  double offset(double m) const { return offsets[static_cast<std::size_t>(index_of(m))]; }
  std::size_t distinct_count(double tolerance = 1e-9) const;
};

OpticalTransitionSet optical_transitions(const SpinSystem& sys);

/// Separation between the |m|=3/2 and |m|=1/2 optical lines, 2(D_es - D_gs).
double peak_separation(const SpinSystem& sys);

/// Apparent FWHM of two equal Lorentzians of FWHM `a` displaced by +-f0/2.
/// Throws ConfigError when the doublet is resolved (f0 > a/sqrt(3)).
double double_lorentzian_fwhm(double f0, double a);

/// Same closed form without the resolved-doublet check. Beyond a/sqrt(3) this
/// is the full width at half of the centre value rather than of the maximum.
double double_lorentzian_center_width(double f0, double a);

/// Inverts double_lorentzian_fwhm for f0 by bisection; widths below `a`
/// clamp to f0 = 0.
double displacement_from_fwhm(double apparent_fwhm, double a);

struct Measurement {
  double value = 0;
  double sigma = 0;
};

struct Interval {
  double value = 0;
  double lo = 0;
  double hi = 0;
};

/// g_es - g_gs = f0 / (3 mu_B B0 / h).
double g_difference_from_displacement(double f0, double b0,
                                      double mu_b_over_h = constants::kMuBOverH);

/// Infers |g_es - g_gs| from the A2 linewidth at field and at zero field.
/// The interval is the min/max over the +-sigma corners of both inputs.
Interval g_factor_difference(Measurement fwhm_at_field, Measurement fwhm_zero_field, double b0,
                             double mu_b_over_h = constants::kMuBOverH);

/// Outer-resonance splitting (highest minus lowest |dm|=1 line) of
/// H = D Sz^2 + g mu_B (Bz Sz + Bx Sx) at the given tilt, by diagonalization.
double outer_splitting(double two_d, double b0, double g, double tilt_deg,
                       double mu_b_over_h = constants::kMuBOverH);

/// Field tilt (degrees) reproducing the measured outer splitting. Searches
/// [0, max_tilt_deg] where the splitting is monotone.
double alignment_angle_from_splitting(double measured, double two_d, double b0, double g,
                                      double mu_b_over_h = constants::kMuBOverH,
                                      double tolerance = 1e-6, double max_tilt_deg = 30.0);

/// Stark tuning coefficient (MHz per MV/m) to dipole difference (e*Angstrom).
/// The line shift is dp * E / h.
double stark_dipole_from_coefficient(double mhz_per_mv_per_m);
double stark_coefficient_from_dipole(double e_angstrom);

/// Spontaneous emission rate A = n w^3 |mu|^2 / (3 pi eps0 hbar c^3), SI units.
double einstein_a_rate(double n, double omega, double mu);
/// Transition dipole (C*m) for a given rate.
double transition_dipole_for_rate(double n, double omega, double rate);

}  // namespace v1spin::spincore
