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

#include "v1spin/spincore.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

namespace v1spin::spincore {

namespace {

constexpr double kSpin = 1.5;

SpinOperators make_spin_matrices() {
  SpinOperators ops;
  Mat4 sp = Mat4::Zero();
  // <m+1| S+ |m> = sqrt(S(S+1) - m(m+1)); index i holds m = 3/2 - i.
  for (int i = 1; i < 4; ++i) {
    const double m = projection(i);
    sp(i - 1, i) = std::sqrt(kSpin * (kSpin + 1) - m * (m + 1));
  }
  const Mat4 sm = sp.adjoint();
  ops.sx = 0.5 * (sp + sm);
  ops.sy = cplx(0, -0.5) * (sp - sm);
  ops.sz = Mat4::Zero();
  for (int i = 0; i < 4; ++i) ops.sz(i, i) = projection(i);
  return ops;
}

Mat4 axial_hamiltonian(double d, double zeeman) {
  Mat4 h = Mat4::Zero();
  for (int i = 0; i < 4; ++i) {
    const double m = projection(i);
    h(i, i) = d * m * m + zeeman * m;
  }
  return h;
}

}  // namespace

const SpinOperators& spin_matrices() {
  static const SpinOperators ops = make_spin_matrices();
  return ops;
}

double projection(int index) { return 1.5 - static_cast<double>(index); }

int index_of(double m) {
  const double idx = 1.5 - m;
  const long r = std::lround(idx);
  if (std::abs(idx - static_cast<double>(r)) > 1e-12 || r < 0 || r > 3)
    throw ConfigError("invalid spin projection " + format_double(m));
  return static_cast<int>(r);
}

SpinSystem SpinSystem::from_splittings(double two_d_gs, double two_d_es, double g_gs,
                                       double g_es, double b0) {
  SpinSystem s;
  s.d_gs = 0.5 * two_d_gs;
  s.d_es = 0.5 * two_d_es;
  s.g_gs = g_gs;
  s.g_es = g_es;
  s.b0 = b0;
  s.validate();
  return s;
}

SpinSystem SpinSystem::main_text() { return from_splittings(4.5, 985.0, 2.0028, 2.0033, 92.0); }

SpinSystem SpinSystem::s7() { return from_splittings(9.0, 975.0, 2.0028, 2.0033, 92.0); }

void SpinSystem::validate() const {
  for (double v : {d_gs, d_es, g_gs, g_es, b0, mu_b_over_h})
    if (!std::isfinite(v)) throw ConfigError("spin system: non-finite parameter");
  if (b0 < 0) throw ConfigError("spin system: b0 must be >= 0");
}

Mat4 gs_hamiltonian(const SpinSystem& sys) {
  sys.validate();
  return axial_hamiltonian(sys.d_gs, sys.gs_zeeman());
}

Mat4 es_hamiltonian(const SpinSystem& sys) {
  sys.validate();
  return axial_hamiltonian(sys.d_es, sys.es_zeeman());
}

std::array<double, 3> MwTransitions::sorted() const {
  std::array<double, 3> v{mw1, mw2, mw3};
  std::sort(v.begin(), v.end());
  return v;
}

double MwTransitions::of_channel(int channel) const {
  switch (channel) {
    case 1: return mw1;
    case 2: return mw2;
    case 3: return mw3;
    default: throw ConfigError("mw channel must be 1, 2 or 3");
  }
}

MwTransitions mw_transition_frequencies(const SpinSystem& sys) {
  sys.validate();
  const double z = sys.gs_zeeman();
  const double two_d = 2.0 * sys.d_gs;
  MwTransitions t;
  t.mw1 = std::abs(z - two_d);
  t.mw2 = std::abs(z);
  t.mw3 = std::abs(z + two_d);
  t.degenerate = sys.b0 == 0.0;
  t.ordered = z > std::abs(two_d);
  return t;
}

std::size_t OpticalTransitionSet::distinct_count(double tolerance) const {
  std::array<double, 4> v = offsets;
  std::sort(v.begin(), v.end());
  std::size_t n = 1;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] - v[i - 1] > tolerance) ++n;
  return n;
}

OpticalTransitionSet optical_transitions(const SpinSystem& sys) {
  sys.validate();
  const double shift = sys.mu_b_over_h * sys.b0 * (sys.g_es - sys.g_gs);
  const double zfs = 2.0 * (sys.d_es - sys.d_gs);
  OpticalTransitionSet set;
  set.offsets = {zfs + 1.5 * shift, 0.5 * shift, -0.5 * shift, zfs - 1.5 * shift};
  return set;
}

double peak_separation(const SpinSystem& sys) { return 2.0 * (sys.d_es - sys.d_gs); }

double double_lorentzian_center_width(double f0, double a) {
  const double f2 = f0 * f0;
  const double a2 = a * a;
  return std::sqrt(2.0 * f2 + std::sqrt(5.0 * f2 * f2 + 2.0 * f2 * a2 + a2 * a2));
}

double double_lorentzian_fwhm(double f0, double a) {
  if (!(a > 0)) throw ConfigError("double_lorentzian_fwhm: FWHM must be positive");
  if (!(f0 >= 0)) throw ConfigError("double_lorentzian_fwhm: displacement must be >= 0");
  // Centre turns into a local minimum once f0^2 > a^2/3.
  if (3.0 * f0 * f0 > a * a * (1.0 + 1e-12))
    throw ConfigError("double_lorentzian_fwhm: doublet is resolved (f0 > a/sqrt(3))");
  return double_lorentzian_center_width(f0, a);
}

double displacement_from_fwhm(double apparent_fwhm, double a) {
  if (!(a > 0)) throw ConfigError("displacement_from_fwhm: FWHM must be positive");
  if (apparent_fwhm <= a) return 0.0;
  double lo = 0.0;
  double hi = a / std::sqrt(3.0);
  if (apparent_fwhm > double_lorentzian_center_width(hi, a))
    throw ConfigError("displacement_from_fwhm: width exceeds the unresolved-doublet range");
  for (int i = 0; i < 200 && hi - lo > 1e-15 * a; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (double_lorentzian_center_width(mid, a) < apparent_fwhm)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

double g_difference_from_displacement(double f0, double b0, double mu_b_over_h) {
  if (!(b0 > 0)) throw ConfigError("g-factor difference requires b0 > 0");
  return f0 / (3.0 * mu_b_over_h * b0);
}

Interval g_factor_difference(Measurement fwhm_at_field, Measurement fwhm_zero_field, double b0,
                             double mu_b_over_h) {
  if (!(b0 > 0)) throw ConfigError("g-factor difference requires b0 > 0");
  auto dg = [&](double at_field, double zero_field) {
    return g_difference_from_displacement(displacement_from_fwhm(at_field, zero_field), b0,
                                          mu_b_over_h);
  };
  Interval out;
  out.value = dg(fwhm_at_field.value, fwhm_zero_field.value);
  out.lo = out.hi = out.value;
  for (double sb : {-1.0, 1.0}) {
    for (double s0 : {-1.0, 1.0}) {
      const double v = dg(fwhm_at_field.value + sb * fwhm_at_field.sigma,
                          fwhm_zero_field.value + s0 * fwhm_zero_field.sigma);
      out.lo = std::min(out.lo, v);
      out.hi = std::max(out.hi, v);
    }
  }
  return out;
}

double outer_splitting(double two_d, double b0, double g, double tilt_deg, double mu_b_over_h) {
  const auto& s = spin_matrices();
  const double theta = tilt_deg * std::numbers::pi / 180.0;
  const double z = g * mu_b_over_h * b0;
  const Mat4 h = 0.5 * two_d * s.sz * s.sz + z * (std::cos(theta) * s.sz + std::sin(theta) * s.sx);
  Eigen::SelfAdjointEigenSolver<Mat4> es(h, Eigen::EigenvaluesOnly);
  const Eigen::Vector4d e = es.eigenvalues();  // ascending
  return std::abs((e(3) - e(2)) - (e(1) - e(0)));
}

double alignment_angle_from_splitting(double measured, double two_d, double b0, double g,
                                      double mu_b_over_h, double tolerance, double max_tilt_deg) {
  if (!(std::abs(g * mu_b_over_h * b0) > std::abs(two_d)))
    throw ConfigError("alignment: field must satisfy |g mu_B B0| > |2D|");
  auto f = [&](double t) { return outer_splitting(two_d, b0, g, t, mu_b_over_h); };
  const double ideal = f(0.0);
  if (measured > ideal + tolerance)
    throw ConfigError("alignment: measured splitting " + format_double(measured) +
                      " MHz exceeds the aligned value " + format_double(ideal) + " MHz");
  if (measured >= ideal - 1e-12 * std::abs(ideal)) return 0.0;
  double lo = 0.0;
  double hi = max_tilt_deg;
  if (measured < f(hi))
    throw ConfigError("alignment: splitting below the invertible tilt range");
  for (int i = 0; i < 200 && hi - lo > 1e-13; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) > measured)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

double stark_dipole_from_coefficient(double mhz_per_mv_per_m) {
  if (mhz_per_mv_per_m < 0) throw ConfigError("Stark coefficient must be >= 0");
  // MHz/(MV/m) == Hz/(V/m); h[eV s] * Hz/(V/m) is e*m.
  return constants::kPlanckEv * mhz_per_mv_per_m / constants::kAngstrom;
}

double stark_coefficient_from_dipole(double e_angstrom) {
  if (e_angstrom < 0) throw ConfigError("dipole difference must be >= 0");
  return e_angstrom * constants::kAngstrom / constants::kPlanckEv;
}

double einstein_a_rate(double n, double omega, double mu) {
  using namespace constants;
  const double c3 = kSpeedOfLight * kSpeedOfLight * kSpeedOfLight;
  return n * omega * omega * omega * mu * mu /
         (3.0 * std::numbers::pi * kVacuumPermittivity * kHbar * c3);
}

double transition_dipole_for_rate(double n, double omega, double rate) {
  if (!(n > 0) || !(omega > 0) || rate < 0)
    throw ConfigError("transition dipole: n, omega must be positive and rate >= 0");
  return std::sqrt(rate / einstein_a_rate(n, omega, 1.0));
}

}  // namespace v1spin::spincore
