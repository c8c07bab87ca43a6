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

#include "v1spin/lindblad.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <unsupported/Eigen/MatrixFunctions>

#include "v1spin/default_rates.hpp"
#include "v1spin/fitkit.hpp"
#include "v1spin/spincore.hpp"

namespace v1spin::lindblad {

namespace {

using Eigen::Index;

CMat kron(const CMat& a, const CMat& b) {
  CMat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

CMat ket_bra(std::size_t n, int a, int b) {
  CMat m = CMat::Zero(static_cast<Index>(n), static_cast<Index>(n));
  m(a, b) = 1.0;
  return m;
}

bool same_pair(const PairRate& p, int a, int b) {
  return (p.a == a && p.b == b) || (p.a == b && p.b == a);
}

struct AuditState {
  std::mutex mu;
  AuditCounters counters;
};

AuditState& audit() {
  static AuditState s;
  return s;
}

double infinity_norm(const CMat& m) { return m.cwiseAbs().rowwise().sum().maxCoeff(); }

}  // namespace

// ---- model ----------------------------------------------------------------------

FineStructureModel FineStructureModel::defaults(Variant variant) {
  FineStructureModel m;
  m.variant = variant;
  m.omega_l = defaults::kOmegaL;
  m.gamma_r = defaults::kGammaR;
  m.gamma_1 = defaults::kGamma1;
  m.gamma_2 = defaults::kGamma2;
  m.gamma_3 = defaults::kGamma3;
  m.gamma_4 = defaults::kGamma4;
  m.gamma_relax = defaults::kGammaRelax;
  m.gamma_s = defaults::kGammaS;
  m.lambda = defaults::kLambda;
  return m;
}

bool FineStructureModel::three_halves(int gs_index) const {
  if (variant == Variant::six_level) return gs_index == 1;
  return gs_index == 0 || gs_index == 3;
}

double FineStructureModel::projection(int gs_index) const {
  if (variant == Variant::six_level) return three_halves(gs_index) ? 1.5 : 0.5;
  return spincore::projection(gs_index);
}

double FineStructureModel::mixing_rate(int a, int b) const {
  double r = 0;
  for (const auto& p : mw_mixing)
    if (same_pair(p, a, b)) r += p.rate;
  return r;
}

void FineStructureModel::set_mixing(int a, int b, double rate) {
  std::erase_if(mw_mixing, [&](const PairRate& p) { return same_pair(p, a, b); });
  if (rate != 0) mw_mixing.push_back({a, b, rate});
}

std::array<int, 2> FineStructureModel::mw_pair(int channel) {
  switch (channel) {
    case 1: return {2, 3};
    case 2: return {1, 2};
    case 3: return {0, 1};
    default: throw ConfigError("mw channel must be 1, 2 or 3");
  }
}

std::string FineStructureModel::level_name(int index) const {
  static const char* kSix[] = {"gs1", "gs2", "es1", "es2", "ds1", "ds2"};
  static const char* kM[] = {"+3/2", "+1/2", "-1/2", "-3/2"};
  if (index < 0 || index >= static_cast<int>(dim())) return "?";
  if (variant == Variant::six_level) return kSix[index];
  if (index < 4) return std::string("gs(") + kM[index] + ")";
  if (index < 8) return std::string("es(") + kM[index - 4] + ")";
  return index == 8 ? "ds1" : "ds2";
}

void FineStructureModel::validate() const {
  for (double v : {d_gs, d_es, omega_l, delta_l, lambda, b0, g, mu_b_over_h})
    if (!std::isfinite(v)) throw ConfigError("fine-structure model: non-finite parameter");
  for (double v : {gamma_r, gamma_1, gamma_2, gamma_3, gamma_4, gamma_relax, gamma_s})
    if (!(v >= 0) || !std::isfinite(v))
      throw ConfigError("fine-structure model: rates must be finite and >= 0");
  for (const auto& p : mw_mixing) {
    if (!(p.rate >= 0) || !std::isfinite(p.rate))
      throw ConfigError("fine-structure model: mixing rates must be >= 0");
    if (p.a < 0 || p.b < 0 || p.a >= gs_count() || p.b >= gs_count() || p.a == p.b)
      throw ConfigError("fine-structure model: mixing pair out of range");
    if (variant == Variant::ten_level && std::abs(p.a - p.b) != 1)
      throw ConfigError("fine-structure model: mixing only between adjacent ground levels");
  }
}

void MwScheme::validate() const {
  if (!(bandwidth > 0)) throw ConfigError("mw scheme: bandwidth must be > 0");
  if (!(rate >= 0)) throw ConfigError("mw scheme: rate must be >= 0");
  if (!std::isfinite(center)) throw ConfigError("mw scheme: centre must be finite");
}

// ---- operators ------------------------------------------------------------------------

CMat build_hamiltonian(const FineStructureModel& m) {
  m.validate();
  const std::size_t n = m.dim();
  CMat h = CMat::Zero(static_cast<Index>(n), static_cast<Index>(n));
  const double dd = m.d_gs - m.d_es;
  // |m|=1/2 pair resonant at delta = -(D_es - D_gs), |m|=3/2 pair at +(D_es - D_gs).
  const double gs_half = 0.5 * (dd - m.delta_l);
  const double gs_three = -0.5 * (dd + m.delta_l);
  const double zeeman = m.g * m.mu_b_over_h * m.b0;
  for (int i = 0; i < m.gs_count(); ++i) {
    const bool th = m.three_halves(i);
    const double base_gs = th ? gs_three : gs_half;
    double z = 0;
    if (m.variant == Variant::ten_level) z = zeeman * m.projection(i);
    h(m.gs(i), m.gs(i)) = base_gs + z;
    h(m.es(i), m.es(i)) = -base_gs + z;
    h(m.gs(i), m.es(i)) = m.omega_l;
    h(m.es(i), m.gs(i)) = m.omega_l;
  }
  h(m.ds1(), m.ds2()) = m.lambda;
  h(m.ds2(), m.ds1()) = m.lambda;
  return h;
}

std::vector<JumpOperator> jump_operators(const FineStructureModel& m) {
  m.validate();
  const std::size_t n = m.dim();
  std::vector<JumpOperator> ops;
  auto add = [&](std::string name, double rate, CMat op) {
    if (rate > 0) ops.push_back({std::move(name), rate, std::move(op)});
  };
  const bool ten = m.variant == Variant::ten_level;
  for (int i = 0; i < m.gs_count(); ++i) {
    const std::string lv = m.level_name(m.es(i));
    add("radiative " + lv, m.gamma_r, ket_bra(n, m.gs(i), m.es(i)));
    if (m.three_halves(i))
      add("isc " + lv + " -> ds2", m.gamma_2, ket_bra(n, m.ds2(), m.es(i)));
    else
      add("isc " + lv + " -> ds1", m.gamma_1, ket_bra(n, m.ds1(), m.es(i)));
  }
  for (int i = 0; i < m.gs_count(); ++i) {
    const double share = ten ? 0.5 : 1.0;
    if (m.three_halves(i))
      add("isc ds2 -> " + m.level_name(i), share * m.gamma_4, ket_bra(n, m.gs(i), m.ds2()));
    else
      add("isc ds1 -> " + m.level_name(i), share * m.gamma_3, ket_bra(n, m.gs(i), m.ds1()));
  }
  for (int i = 0; i + 1 < m.gs_count(); ++i) {
    add("relax " + m.level_name(i) + " <-> " + m.level_name(i + 1), m.gamma_relax,
        ket_bra(n, i, i + 1) + ket_bra(n, i + 1, i));
  }
  add("doublet dephasing", m.gamma_s, ket_bra(n, m.ds1(), m.ds1()) - ket_bra(n, m.ds2(), m.ds2()));
  for (const auto& p : m.mw_mixing) {
    const std::string pair = m.level_name(p.a) + " <-> " + m.level_name(p.b);
    add("mw " + pair, p.rate, ket_bra(n, p.a, p.b));
    add("mw " + pair + " (reverse)", p.rate, ket_bra(n, p.b, p.a));
  }
  return ops;
}

CMat build_liouvillian(const FineStructureModel& m) {
  const CMat h = build_hamiltonian(m);
  const auto n = static_cast<Index>(m.dim());
  const CMat id = CMat::Identity(n, n);
  CMat l = cplx(0, -kTwoPi) * (kron(id, h) - kron(h.transpose(), id));
  for (const auto& j : jump_operators(m)) {
    const CMat ada = j.op.adjoint() * j.op;
    l += j.rate * (kron(j.op.conjugate(), j.op) - 0.5 * kron(id, ada) - 0.5 * kron(ada.transpose(), id));
  }
  return l;
}

CVec vec(const CMat& rho) { return Eigen::Map<const CVec>(rho.data(), rho.size()); }

CMat unvec(const CVec& v, std::size_t n) {
  if (static_cast<std::size_t>(v.size()) != n * n) throw ConfigError("unvec: size mismatch");
  return Eigen::Map<const CMat>(v.data(), static_cast<Index>(n), static_cast<Index>(n));
}

// ---- state hygiene ----------------------------------------------------------------------

StateCheck check_state(const CMat& rho) {
  StateCheck c;
  c.hermiticity = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
  c.trace_error = std::abs(rho.trace() - cplx(1.0, 0.0));
  const CMat herm = 0.5 * (rho + rho.adjoint());
  Eigen::SelfAdjointEigenSolver<CMat> es(herm, Eigen::EigenvaluesOnly);
  c.min_eigenvalue = es.eigenvalues().minCoeff();
  c.ok = c.hermiticity <= 1e-10 && c.trace_error <= 1e-10 && c.min_eigenvalue >= -1e-9;
  return c;
}

void audit_state(const CMat& rho) {
  const StateCheck c = check_state(rho);
  auto& a = audit();
  std::lock_guard lock(a.mu);
  ++a.counters.checked;
  if (!c.ok) ++a.counters.violations;
  a.counters.worst_hermiticity = std::max(a.counters.worst_hermiticity, c.hermiticity);
  a.counters.worst_trace_error = std::max(a.counters.worst_trace_error, c.trace_error);
  a.counters.worst_min_eigenvalue = std::min(a.counters.worst_min_eigenvalue, c.min_eigenvalue);
}

AuditCounters audit_counters() {
  auto& a = audit();
  std::lock_guard lock(a.mu);
  return a.counters;
}

void reset_audit() {
  auto& a = audit();
  std::lock_guard lock(a.mu);
  a.counters = {};
}

// ---- steady state --------------------------------------------------------------------------

CMat steady_state(const FineStructureModel& model) {
  return steady_state(build_liouvillian(model), model.dim(), &model);
}

CMat steady_state(const CMat& l, std::size_t n, const FineStructureModel* names_from) {
  if (static_cast<std::size_t>(l.rows()) != n * n || l.rows() != l.cols())
    throw ConfigError("steady_state: superoperator size mismatch");
  Eigen::BDCSVD<CMat> svd(l, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const Index last = s.size() - 1;
  const double smax = s(0);
  const double thresh = 1e-11 * std::max(smax, 1e-300);

  Index null_dim = 0;
  for (Index k = last; k >= 0 && s(k) <= thresh; --k) ++null_dim;
  if (null_dim > 1) {
    std::ostringstream msg;
    msg << "steady state is not unique: null space of dimension " << null_dim
        << "; disconnected subspaces:";
    for (Index k = last; k > last - null_dim; --k) {
      const CMat r = unvec(svd.matrixV().col(k), n);
      const CMat hr = r + r.adjoint();
      double mx = 0;
      for (Index i = 0; i < hr.rows(); ++i) mx = std::max(mx, std::abs(hr(i, i)));
      msg << " {";
      bool first = true;
      for (Index i = 0; i < hr.rows(); ++i) {
        if (std::abs(hr(i, i)) > 1e-6 * mx) {
          msg << (first ? "" : ", ")
              << (names_from ? names_from->level_name(static_cast<int>(i))
                             : "level " + std::to_string(i));
          first = false;
        }
      }
      msg << "}";
    }
    msg << ". Check that every level decays to the ground state and that ground levels are mixed.";
    throw SolverError(msg.str());
  }

  CMat rho = unvec(svd.matrixV().col(last), n);
  cplx tr = rho.trace();
  if (std::abs(tr) < 1e-14) throw SolverError("steady state has vanishing trace");
  rho /= tr;
  rho = 0.5 * (rho + rho.adjoint());
  rho /= rho.trace().real();

  // One step of inverse iteration polishes the null vector when the SVD
  // leaves a residual above the documented bound.
  CVec v = vec(rho);
  double resid = (l * v).norm();
  if (resid > 1e-12) {
    const Index nn = l.rows();
    CMat bordered = l;
    // Replace one equation with the trace condition.
    bordered.row(0).setZero();
    for (std::size_t i = 0; i < n; ++i) bordered(0, static_cast<Index>(i * n + i)) = 1.0;
    CVec rhs = CVec::Zero(nn);
    rhs(0) = 1.0;
    const CVec refined = bordered.partialPivLu().solve(rhs);
    CMat r2 = unvec(refined, n);
    r2 = 0.5 * (r2 + r2.adjoint());
    r2 /= r2.trace().real();
    if ((l * vec(r2)).norm() < resid) {
      rho = r2;
      resid = (l * vec(rho)).norm();
    }
  }
  if (resid > 1e-10)
    throw SolverError("steady state residual " + format_double(resid) + " exceeds 1e-10");
  audit_state(rho);
  return rho;
}

// ---- time evolution ------------------------------------------------------------------------------

std::vector<CMat> evolve(const FineStructureModel& model, const CMat& rho0,
                         std::span<const double> t_grid, const EvolveOptions& options) {
  if (static_cast<std::size_t>(rho0.rows()) != model.dim())
    throw ConfigError("evolve: state dimension does not match the model");
  return evolve(build_liouvillian(model), rho0, t_grid, options);
}

std::vector<CMat> evolve(const CMat& l, const CMat& rho0, std::span<const double> t_grid,
                         const EvolveOptions& options) {
  const auto n = static_cast<std::size_t>(rho0.rows());
  if (rho0.rows() != rho0.cols() || static_cast<std::size_t>(l.rows()) != n * n)
    throw ConfigError("evolve: state and superoperator sizes differ");
  const StateCheck c0 = check_state(rho0);
  if (!c0.ok) throw ConfigError("evolve: initial state is not a valid density matrix");
  for (std::size_t i = 1; i < t_grid.size(); ++i)
    if (!(t_grid[i] >= t_grid[i - 1])) throw ConfigError("evolve: time grid must be ascending");

  const double norm = infinity_norm(l);
  // Fastest coherent oscillation: largest |Im| eigenvalue magnitude is
  // bounded by the norm; period 2 pi / norm.
  double h_max = std::numeric_limits<double>::infinity();
  if (norm > 0) h_max = options.step_fraction * std::min(1.0 / norm, kTwoPi / norm);

  std::size_t total = 0;
  for (std::size_t i = 1; i < t_grid.size(); ++i) {
    const double dt = t_grid[i] - t_grid[i - 1];
    if (dt > 0 && std::isfinite(h_max)) {
      const double steps = std::ceil(dt / h_max);
      if (steps > static_cast<double>(options.max_steps))
        throw SolverError("evolve: " + format_double(steps) +
                          " RK4 steps required (stiff system); rescale rates or use propagator()");
      total += static_cast<std::size_t>(steps);
      if (total > options.max_steps)
        throw SolverError("evolve: step budget exceeded (stiff system); rescale rates or use "
                          "propagator()");
    }
  }

  std::vector<CMat> out;
  out.reserve(t_grid.size());
  CVec v = vec(rho0);
  if (!t_grid.empty()) {
    out.push_back(rho0);
    audit_state(rho0);
  }
  for (std::size_t i = 1; i < t_grid.size(); ++i) {
    const double dt = t_grid[i] - t_grid[i - 1];
    if (dt > 0 && norm > 0) {
      const auto steps = static_cast<std::size_t>(std::ceil(dt / h_max));
      const double h = dt / static_cast<double>(steps);
      for (std::size_t k = 0; k < steps; ++k) {
        const CVec k1 = l * v;
        const CVec k2 = l * (v + 0.5 * h * k1);
        const CVec k3 = l * (v + 0.5 * h * k2);
        const CVec k4 = l * (v + h * k3);
        v += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        CMat r = unvec(v, n);
        r = 0.5 * (r + r.adjoint());
        v = vec(r);
      }
    }
    out.push_back(unvec(v, n));
    audit_state(out.back());
  }
  return out;
}

CMat propagator(const CMat& l, double t) {
  if (t < 0) throw ConfigError("propagator: negative duration");
  if (t == 0) return CMat::Identity(l.rows(), l.cols());
  const CMat lt = l * t;
  return lt.exp();
}

CMat integrated_propagator(const CMat& l, double t) {
  if (t < 0) throw ConfigError("integrated_propagator: negative duration");
  const Index n = l.rows();
  if (t == 0) return CMat::Zero(n, n);
  CMat aug = CMat::Zero(2 * n, 2 * n);
  aug.topLeftCorner(n, n) = l * t;
  aug.topRightCorner(n, n) = CMat::Identity(n, n) * t;
  const CMat e = aug.exp();
  return e.topRightCorner(n, n);
}

double excited_population(const FineStructureModel& m, const CMat& rho) {
  double s = 0;
  for (int i = 0; i < m.gs_count(); ++i) s += rho(m.es(i), m.es(i)).real();
  return s;
}

// ---- spectra --------------------------------------------------------------------------------------

Trace ple_spectrum(const FineStructureModel& model, std::span<const double> delta_grid,
                   bool weight_by_gamma_r) {
  model.validate();
  Trace t;
  t.x_label = "delta_l_MHz";
  t.y_label = weight_by_gamma_r ? "emission_rate_per_us" : "excited_population";
  FineStructureModel m = model;
  for (double d : delta_grid) {
    if (!std::isfinite(d)) throw ConfigError("ple_spectrum: non-finite detuning");
    m.delta_l = d;
    const CMat rho = steady_state(m);
    double s = excited_population(m, rho);
    if (weight_by_gamma_r) s *= m.gamma_r;
    t.x.push_back(d);
    t.y.push_back(s);
  }
  return t;
}

FineStructureModel apply_scheme(const FineStructureModel& model, const MwScheme& scheme) {
  scheme.validate();
  model.validate();
  spincore::SpinSystem sys;
  sys.d_gs = model.d_gs;
  sys.g_gs = model.g;
  sys.b0 = model.b0;
  sys.mu_b_over_h = model.mu_b_over_h;
  const auto freqs = spincore::mw_transition_frequencies(sys);
  std::array<bool, 3> driven{};
  for (int ch = 1; ch <= 3; ++ch)
    driven[static_cast<std::size_t>(ch - 1)] =
        std::abs(freqs.of_channel(ch) - scheme.center) <= 0.5 * scheme.bandwidth;
  FineStructureModel out = model;
  if (model.variant == Variant::six_level) {
    const int count = driven[0] + driven[1] + driven[2];
    if (count != 0 && count != 3)
      throw ConfigError("a2_a1_ratio: the six_level model cannot resolve a selective MW scheme; "
                        "use the ten_level variant");
    if (count == 3) out.set_mixing(0, 1, out.mixing_rate(0, 1) + scheme.rate);
    return out;
  }
  for (int ch = 1; ch <= 3; ++ch) {
    if (!driven[static_cast<std::size_t>(ch - 1)]) continue;
    const auto pr = FineStructureModel::mw_pair(ch);
    out.set_mixing(pr[0], pr[1], out.mixing_rate(pr[0], pr[1]) + scheme.rate);
  }
  return out;
}

PeakFit fit_ple_peak(const FineStructureModel& model, double resonance) {
  FineStructureModel m = model;
  auto signal = [&](double d) {
    m.delta_l = d;
    return excited_population(m, steady_state(m));
  };
  const double top = signal(resonance);
  if (!(top > 0)) throw SolverError("no PLE signal at resonance " + format_double(resonance));
  // Expand until both sides fall below half of the resonant value, but keep
  // the 4u window inside half the A1-A2 separation: a pumped-out line can stay
  // flat far from resonance and must not pick up the other peak.
  double u_max = std::abs(model.a2_resonance() - model.a1_resonance()) / 8;
  if (!(u_max > 0)) u_max = 1e6;
  double u = std::min(1.0, u_max);
  for (int i = 0; i < 40 && u < u_max; ++i) {
    if (signal(resonance + u) < 0.5 * top && signal(resonance - u) < 0.5 * top) break;
    u = std::min(1.5 * u, u_max);
  }
  const std::vector<double> grid = linspace(resonance - 4 * u, resonance + 4 * u, 81);
  Trace t = ple_spectrum(model, grid);
  const auto r = fitkit::fit_lorentzian(t, 1);
  if (r.has_flag("degenerate")) throw FitError("PLE peak fit is degenerate");
  return {r.value("center1"), r.value("fwhm1"), r.value("amplitude1")};
}

PeakRatio a2_a1_ratio(const FineStructureModel& model, const MwScheme& scheme) {
  const FineStructureModel m = apply_scheme(model, scheme);
  PeakRatio out;
  out.a1 = fit_ple_peak(m, m.a1_resonance());
  out.a2 = fit_ple_peak(m, m.a2_resonance());
  if (!(out.a1.amplitude > 0)) throw SolverError("a2_a1_ratio: A1 amplitude is not positive");
  out.ratio = out.a2.amplitude / out.a1.amplitude;
  return out;
}

Trace ple_linewidth(const FineStructureModel& model, std::span<const double> omega_grid) {
  Trace t;
  t.x_label = "omega_l_MHz";
  t.y_label = "fwhm_MHz";
  FineStructureModel m = model;
  double prev = 0;
  std::size_t failed = 0;
  for (double om : omega_grid) {
    if (!(om > 0) || om < prev) throw ConfigError("ple_linewidth: omega grid must be positive ascending");
    prev = om;
    m.omega_l = om;
    double w = std::numeric_limits<double>::quiet_NaN();
    try {
      w = fit_ple_peak(m, m.a2_resonance()).fwhm;
    } catch (const Error&) {
      ++failed;
    }
    t.x.push_back(om);
    t.y.push_back(w);
  }
  t.meta["failed_points"] = std::to_string(failed);
  return t;
}

PopulationTrajectory pumping_trajectory(const FineStructureModel& model, double mw3_rate,
                                        std::span<const double> t_grid, double settle_us) {
  if (model.variant != Variant::ten_level)
    throw ConfigError("pumping_trajectory requires the ten_level variant");
  if (!(mw3_rate >= 0)) throw ConfigError("pumping_trajectory: mw3 rate must be >= 0");
  if (!(settle_us >= 0)) throw ConfigError("pumping_trajectory: settle time must be >= 0");
  FineStructureModel drive = model;
  drive.delta_l = model.a2_resonance();
  const auto p3 = FineStructureModel::mw_pair(3);
  drive.set_mixing(p3[0], p3[1], drive.mixing_rate(p3[0], p3[1]) + mw3_rate);
  FineStructureModel dark = model;
  dark.omega_l = 0;
  dark.mw_mixing.clear();

  const CMat l = build_liouvillian(drive);
  const CMat settle = propagator(build_liouvillian(dark), settle_us);
  const std::size_t n = model.dim();
  CMat rho0 = CMat::Zero(static_cast<Index>(n), static_cast<Index>(n));
  for (int i = 0; i < 4; ++i) rho0(i, i) = 0.25;

  PopulationTrajectory out;
  std::map<double, CMat> cache;
  CVec v = vec(rho0);
  double t_prev = t_grid.empty() ? 0.0 : t_grid.front();
  if (!(t_prev >= 0)) throw ConfigError("pumping_trajectory: time grid must start at t >= 0");
  if (t_prev > 0) v = propagator(l, t_prev) * v;
  for (double t : t_grid) {
    const double dt = t - t_prev;
    if (dt < 0) throw ConfigError("pumping_trajectory: time grid must be ascending");
    if (dt > 0) {
      auto it = cache.find(dt);
      if (it == cache.end()) it = cache.emplace(dt, propagator(l, dt)).first;
      v = it->second * v;
    }
    t_prev = t;
    CMat r = unvec(settle * v, n);
    r = 0.5 * (r + r.adjoint());
    audit_state(r);
    std::array<double, 4> p{};
    for (int i = 0; i < 4; ++i) p[static_cast<std::size_t>(i)] = r(i, i).real();
    out.t.push_back(t);
    out.populations.push_back(p);
  }
  return out;
}

}  // namespace v1spin::lindblad
