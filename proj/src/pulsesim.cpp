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

#include "v1spin/pulsesim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>

#include "v1spin/eseem.hpp"

namespace v1spin::pulsesim {

using lindblad::FineStructureModel;
using Index = Eigen::Index;

void NuclearCoupling::validate() const {
  if (!std::isfinite(a_par) || !std::isfinite(a_perp) || !std::isfinite(omega_i))
    throw ConfigError("nuclear coupling: non-finite parameter");
  if (omega_i < 0) throw ConfigError("nuclear coupling: omega_i must be >= 0");
}

void SequenceSettings::validate() const {
  if (!std::isfinite(mw_drive_mhz) || mw_drive_mhz < 0) throw ConfigError("mw drive must be finite and >= 0");
  if (!std::isfinite(mw_detuning_mhz)) throw ConfigError("mw detuning must be finite");
  if (std::isnan(t2star_us) || std::isnan(t2_us)) throw ConfigError("coherence times must not be NaN");
  if (!(t2_stretch > 0) || !std::isfinite(t2_stretch)) throw ConfigError("T2 stretch exponent must be > 0");
  if (!(mw_mixing_rate >= 0) || !std::isfinite(mw_mixing_rate)) throw ConfigError("mw mixing rate must be >= 0");
  if (!(offres_rate >= 0) || !std::isfinite(offres_rate)) throw ConfigError("off-resonant rate must be >= 0");
  if (!(settle_us >= 0) || !std::isfinite(settle_us)) throw ConfigError("settle time must be >= 0");
  if (ensemble_nodes < 1 || ensemble_nodes > 512) throw ConfigError("ensemble nodes must be in 1..512");
  if (initial_populations) {
    double s = 0;
    for (double p : *initial_populations) {
      if (!(p >= 0)) throw ConfigError("initial populations must be >= 0");
      s += p;
    }
    if (std::abs(s - 1) > 1e-9) throw ConfigError("initial populations must sum to 1");
  }
}

FineStructureModel sequence_model(const spincore::SpinSystem& sys, const FineStructureModel& model) {
  sys.validate();
  FineStructureModel m = model;
  m.variant = lindblad::Variant::ten_level;
  if (model.variant == lindblad::Variant::six_level) m.mw_mixing.clear();
  m.d_gs = sys.d_gs;
  m.d_es = sys.d_es;
  m.b0 = sys.b0;
  m.g = sys.g_gs;
  m.mu_b_over_h = sys.mu_b_over_h;
  m.validate();
  return m;
}

double rabi_frequency(int channel, double drive_mhz) {
  const double c = channel == 2 ? 1.0 : std::sqrt(3.0) / 2.0;
  FineStructureModel::mw_pair(channel);  // validates the channel
  return 2.0 * c * drive_mhz;
}

CMat mw_unitary(int channel, double theta, double phase, std::size_t dim) {
  const auto pr = FineStructureModel::mw_pair(channel);
  if (dim < 4) throw ConfigError("mw_unitary: dimension must be >= 4");
  CMat u = CMat::Identity(static_cast<Index>(dim), static_cast<Index>(dim));
  const double c = std::cos(theta / 2), s = std::sin(theta / 2);
  u(pr[0], pr[0]) = c;
  u(pr[1], pr[1]) = c;
  u(pr[0], pr[1]) = cplx(0, -s) * std::polar(1.0, -phase);
  u(pr[1], pr[0]) = cplx(0, -s) * std::polar(1.0, phase);
  return u;
}

namespace {

double phase_angle(Phase p) {
  switch (p) {
    case Phase::plus_x: return 0;
    case Phase::plus_y: return std::numbers::pi / 2;
    case Phase::minus_x: return std::numbers::pi;
    case Phase::minus_y: return 3 * std::numbers::pi / 2;
  }
  return 0;
}

// exp(-i 2 pi t H) for H = a Iz + b Ix (MHz, us).
Eigen::Matrix2cd nuclear_step(double a, double b, double t) {
  const double w = std::hypot(a, b);
  Eigen::Matrix2cd u = Eigen::Matrix2cd::Identity();
  if (w == 0) return u;
  const double th = kTwoPi * w * t / 2;
  const double c = std::cos(th), s = std::sin(th);
  const double nz = a / w, nx = b / w;
  u(0, 0) = cplx(c, -s * nz);
  u(1, 1) = cplx(c, s * nz);
  u(0, 1) = cplx(0, -s * nx);
  u(1, 0) = cplx(0, -s * nx);
  return u;
}

// Nodes and normalized weights for averaging over exp(-x^2) / sqrt(pi).
void gauss_hermite(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(static_cast<std::size_t>(n), 0.0);
  w.assign(static_cast<std::size_t>(n), 0.0);
  if (n == 1) {
    w[0] = 1;
    return;
  }
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) j(k - 1, k) = j(k, k - 1) = std::sqrt(k / 2.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
  for (int k = 0; k < n; ++k) {
    x[static_cast<std::size_t>(k)] = es.eigenvalues()(k);
    const double v = es.eigenvectors()(0, k);
    w[static_cast<std::size_t>(k)] = v * v;
  }
}

bool uses_symbol(const Element& e) {
  return std::visit(
      [](const auto& el) {
        using T = std::decay_t<decltype(el)>;
        if constexpr (std::is_same_v<T, MwPulse>)
          return el.rotation.kind == Rotation::Kind::duration && el.rotation.duration.is_symbol();
        else
          return el.duration.is_symbol();
      },
      e);
}

struct Node {
  double weight = 1;
  double delta = 0;  // static detuning, MHz
  CMat rho;
  double t_cum = 0;  // free evolution since the last optical step, us
};

struct Ensemble {
  std::vector<Node> nodes;
  bool branched = false;
  bool had_content = false;
};

// Shared by every sequence run with the same model and settings, so sweeps
// and repeated experiments reuse propagators.
class Engine {
 public:
  Engine(const spincore::SpinSystem& sys, const FineStructureModel& model,
         const std::optional<NuclearCoupling>& coupling, const SequenceSettings& settings)
      : model_(sequence_model(sys, model)), coupling_(coupling), s_(settings) {
    s_.validate();
    if (coupling_) coupling_->validate();
    nn_ = coupling_ ? 2 : 1;
    dim_ = 10 * nn_;
    sigma_ = (std::isfinite(s_.t2star_us) && s_.t2star_us > 0 && s_.ensemble_nodes > 1)
                 ? 1.0 / (std::sqrt(2.0) * std::numbers::pi * s_.t2star_us)
                 : 0.0;
    if (sigma_ > 0) gauss_hermite(s_.ensemble_nodes, gh_x_, gh_w_);
    FineStructureModel dark = model_;
    dark.omega_l = 0;
    dark.mw_mixing.clear();
    settle_ = lindblad::propagator(lindblad::build_liouvillian(dark), s_.settle_us);
  }

  Ensemble initial() const {
    CMat r10 = CMat::Zero(10, 10);
    for (int i = 0; i < 4; ++i)
      r10(i, i) = s_.initial_populations ? (*s_.initial_populations)[static_cast<std::size_t>(i)] : 0.25;
    Ensemble e;
    e.nodes.push_back({1.0, 0.0, lift(r10), 0.0});
    return e;
  }

  // Applies one element. `signal` receives the readout value when non-null.
  void apply(const Element& el, double swept, Ensemble& ens, double* signal, bool keep_state = true) {
    if (const auto* m = std::get_if<MwPulse>(&el)) {
      const int ch = mw_index(m->channel);
      double theta = 0;
      switch (m->rotation.kind) {
        case Rotation::Kind::pi: theta = std::numbers::pi; break;
        case Rotation::Kind::half_pi: theta = std::numbers::pi / 2; break;
        case Rotation::Kind::degrees: theta = m->rotation.degrees * std::numbers::pi / 180; break;
        case Rotation::Kind::duration:
          theta = kTwoPi * rabi_frequency(ch, s_.mw_drive_mhz) * m->rotation.duration.microseconds(swept);
          break;
      }
      const CMat u = Eigen::kroneckerProduct(mw_unitary(ch, theta, phase_angle(m->phase), 4),
                                             CMat::Identity(nn_, nn_))
                         .eval();
      for (auto& n : ens.nodes) rotate_ground(n.rho, u);
      ens.had_content = true;
    } else if (const auto* w = std::get_if<Wait>(&el)) {
      const double t = w->duration.microseconds(swept);
      if (!ens.branched) branch(ens);
      for (auto& n : ens.nodes) free_evolution(n, t);
    } else if (const auto* l = std::get_if<Laser>(&el)) {
      optical(l->channel, l->with, l->duration.microseconds(swept), ens, nullptr, true);
      ens.had_content = true;
    } else if (const auto* r = std::get_if<Readout>(&el)) {
      optical(r->channel, r->with, r->duration.microseconds(swept), ens, signal, keep_state);
    }
  }

  CMat average(const Ensemble& ens) const {
    CMat avg = CMat::Zero(dim_, dim_);
    for (const auto& n : ens.nodes) avg += n.weight * n.rho;
    return 0.5 * (avg + avg.adjoint());
  }

  std::array<double, 4> populations(const Ensemble& ens) const {
    const CMat r = reduce(average(ens));
    std::array<double, 4> p{};
    for (int i = 0; i < 4; ++i) p[static_cast<std::size_t>(i)] = r(i, i).real();
    return p;
  }

 private:
  CMat lift(const CMat& r10) const {
    if (nn_ == 1) return r10;
    return Eigen::kroneckerProduct(r10, CMat::Identity(2, 2) / 2.0).eval();
  }

  CMat reduce(const CMat& rho) const {
    if (nn_ == 1) return rho;
    CMat r = CMat::Zero(10, 10);
    for (Index i = 0; i < 10; ++i)
      for (Index j = 0; j < 10; ++j) r(i, j) = rho(2 * i, 2 * j) + rho(2 * i + 1, 2 * j + 1);
    return r;
  }

  // rho -> U rho U^dagger with U acting on the ground block only.
  void rotate_ground(CMat& rho, const CMat& ug) const {
    const Index g = ug.rows();
    rho.topRows(g) = (ug * rho.topRows(g)).eval();
    rho.leftCols(g) = (rho.leftCols(g) * ug.adjoint()).eval();
  }

  void branch(Ensemble& ens) const {
    ens.branched = true;
    if (sigma_ == 0) return;
    const Node base = ens.nodes.front();
    ens.nodes.clear();
    for (std::size_t k = 0; k < gh_x_.size(); ++k)
      ens.nodes.push_back({gh_w_[k], std::sqrt(2.0) * sigma_ * gh_x_[k], base.rho, base.t_cum});
  }

  void free_evolution(Node& n, double t) const {
    if (t == 0) return;
    CMat u = CMat::Zero(4 * nn_, 4 * nn_);
    const double det = s_.mw_detuning_mhz + n.delta;
    for (int i = 0; i < 4; ++i) {
      const double m = spincore::projection(i);
      const cplx ph = std::polar(1.0, -kTwoPi * det * m * t);
      if (nn_ == 1) {
        u(i, i) = ph;
      } else {
        const double a = 1e-3 * (coupling_->omega_i + m * coupling_->a_par);
        const double b = 1e-3 * m * coupling_->a_perp;
        u.block(2 * i, 2 * i, 2, 2) = ph * nuclear_step(a, b, t);
      }
    }
    rotate_ground(n.rho, u);
    if (std::isfinite(s_.t2_us) && s_.t2_us > 0) {
      auto d = [&](double x) { return std::pow(x / s_.t2_us, s_.t2_stretch); };
      const double f = std::exp(d(n.t_cum) - d(n.t_cum + t));
      for (Index i = 0; i < 4; ++i)
        for (Index j = 0; j < 4; ++j)
          if (i != j) n.rho.block(i * nn_, j * nn_, nn_, nn_) *= f;
    }
    n.t_cum += t;
  }

  std::string key(Channel ch, const std::vector<Channel>& with) const {
    std::string k = to_string(ch);
    std::vector<int> idx;
    for (Channel c : with) idx.push_back(mw_index(c));
    std::sort(idx.begin(), idx.end());
    for (int i : idx) k += "+MW" + std::to_string(i);
    return k;
  }

  const CMat& liouvillian(Channel ch, const std::vector<Channel>& with) {
    const std::string k = key(ch, with);
    auto it = liouvillians_.find(k);
    if (it != liouvillians_.end()) return it->second;
    FineStructureModel m = model_;
    m.delta_l = line(ch);
    for (Channel c : with) {
      const auto pr = FineStructureModel::mw_pair(mw_index(c));
      m.set_mixing(pr[0], pr[1], m.mixing_rate(pr[0], pr[1]) + s_.mw_mixing_rate);
    }
    return liouvillians_.emplace(k, lindblad::build_liouvillian(m)).first->second;
  }

  double line(Channel ch) const {
    const double lo = std::min(model_.a1_resonance(), model_.a2_resonance());
    return ch == Channel::A2 ? model_.upper_line() : lo;
  }

  // Ground levels the line is resonant with.
  std::array<int, 2> addressed(Channel ch) const {
    const bool three_halves = line(ch) == model_.a2_resonance();
    return three_halves ? std::array<int, 2>{0, 3} : std::array<int, 2>{1, 2};
  }

  const CMat& propagator(Channel ch, const std::vector<Channel>& with, double t) {
    const auto k = std::make_pair(key(ch, with), t);
    auto it = propagators_.find(k);
    if (it != propagators_.end()) return it->second;
    return propagators_.emplace(k, lindblad::propagator(liouvillian(ch, with), t)).first->second;
  }

  struct ReadoutRow {
    Eigen::RowVectorXcd row;
    double norm = 0;
  };

  const ReadoutRow& readout_row(Channel ch, const std::vector<Channel>& with, double t) {
    const auto k = std::make_pair(key(ch, with), t);
    auto it = rows_.find(k);
    if (it != rows_.end()) return it->second;
    const CMat ip = lindblad::integrated_propagator(liouvillian(ch, with), t);
    ReadoutRow r;
    r.row = Eigen::RowVectorXcd::Zero(100);
    for (int i = 0; i < 4; ++i) {
      const Index e = model_.es(i);
      r.row += ip.row(e + 10 * e);
    }
    CMat mix = CMat::Zero(10, 10);
    for (int i : addressed(ch)) mix(i, i) = 0.5;
    r.norm = (r.row * lindblad::vec(mix))(0).real();
    return rows_.emplace(k, r).first->second;
  }

  void optical(Channel ch, const std::vector<Channel>& with, double t, Ensemble& ens, double* signal,
               bool keep_state) {
    double sig = 0;
    for (auto& n : ens.nodes) {
      CMat r10 = reduce(n.rho);
      CVec v;
      if (ch == Channel::OFFRES) {
        const double keep = std::exp(-s_.offres_rate * t);
        CMat mix = CMat::Zero(10, 10);
        for (int i = 0; i < 4; ++i) mix(i, i) = 0.25;
        r10 = keep * r10 + (1 - keep) * r10.trace() * mix;
        v = lindblad::vec(r10);
      } else {
        v = lindblad::vec(r10);
        if (signal && t > 0) {
          const ReadoutRow& rr = readout_row(ch, with, t);
          if (rr.norm > 0) sig += n.weight * (rr.row * v)(0).real() / rr.norm;
        }
        if (!keep_state) continue;
        if (t > 0) v = propagator(ch, with, t) * v;
      }
      v = settle_ * v;
      r10 = lindblad::unvec(v, 10);
      r10 = 0.5 * (r10 + r10.adjoint());
      n.rho = lift(r10);
      n.t_cum = 0;
    }
    if (signal) *signal = sig;
  }

  FineStructureModel model_;
  std::optional<NuclearCoupling> coupling_;
  SequenceSettings s_;
  Index nn_ = 1;
  Index dim_ = 10;
  double sigma_ = 0;
  std::vector<double> gh_x_, gh_w_;
  CMat settle_;
  std::map<std::string, CMat> liouvillians_;
  std::map<std::pair<std::string, double>, CMat> propagators_;
  std::map<std::pair<std::string, double>, ReadoutRow> rows_;
};

SequenceResult run(Engine& engine, const PulseSequence& seq) {
  if (seq.elements.empty()) throw ConfigError("empty sequence");
  SequenceResult out;
  const auto& els = seq.elements;
  std::size_t last_readout = els.size();
  std::size_t first_swept = els.size();
  bool content = false;
  for (std::size_t i = 0; i < els.size(); ++i) {
    if (std::holds_alternative<Readout>(els[i])) {
      last_readout = i;
      if (!content)
        out.warnings.push_back("readout at element " + std::to_string(i + 1) +
                               " precedes any laser or microwave step");
    } else if (!std::holds_alternative<Wait>(els[i])) {
      content = true;
    }
    if (first_swept == els.size() && uses_symbol(els[i])) first_swept = i;
  }
  if (last_readout == els.size()) out.warnings.push_back("sequence has no readout; signal is 0");

  std::vector<double> xs{0.0};
  if (seq.sweep) xs = seq.sweep->values_us();
  else first_swept = els.size();

  // Elements before the first swept one are shared by every point.
  Ensemble prefix = engine.initial();
  for (std::size_t i = 0; i < first_swept; ++i) {
    if (i == last_readout) {
      // The final readout is unswept; the result is the same for every point.
      break;
    }
    engine.apply(els[i], 0.0, prefix, nullptr);
    lindblad::audit_state(engine.average(prefix));
  }
  const std::size_t start = std::min(first_swept, last_readout);

  out.signal.x_label = seq.sweep ? seq.sweep->symbol + "_us" : "x";
  out.signal.y_label = "signal";
  for (double x : xs) {
    Ensemble ens = prefix;
    double y = 0;
    bool recorded = false;
    for (std::size_t i = start; i < els.size(); ++i) {
      if (i == last_readout) {
        out.populations.push_back(engine.populations(ens));
        recorded = true;
        const bool last = i + 1 == els.size();
        engine.apply(els[i], x, ens, &y, !last);
        if (last) break;
      } else {
        engine.apply(els[i], x, ens, nullptr);
      }
      lindblad::audit_state(engine.average(ens));
    }
    if (!recorded) out.populations.push_back(engine.populations(ens));
    out.signal.x.push_back(x);
    out.signal.y.push_back(y);
  }
  return out;
}

DurationRef lit(double v, Unit u = Unit::us) { return DurationRef{Duration{v, u}, {}}; }
DurationRef sym(const std::string& s) { return DurationRef{std::nullopt, s}; }

Readout standard_readout() { return Readout{Channel::A2, lit(1), {}}; }

}  // namespace

SequenceResult simulate_sequence(const PulseSequence& seq, const spincore::SpinSystem& sys,
                                 const FineStructureModel& model,
                                 const std::optional<NuclearCoupling>& coupling,
                                 const SequenceSettings& settings) {
  Engine engine(sys, model, coupling, settings);
  return run(engine, seq);
}

double eseem_quantum_oracle(const NuclearCoupling& coupling, double tau_us) {
  coupling.validate();
  if (!(tau_us >= 0)) throw ConfigError("eseem_quantum_oracle: tau must be >= 0");
  auto echo = [&](double a_par, double a_perp) {
    CMat w = CMat::Zero(8, 8);
    for (int i = 0; i < 4; ++i) {
      const double m = spincore::projection(i);
      w.block(2 * i, 2 * i, 2, 2) =
          nuclear_step(1e-3 * (coupling.omega_i + m * a_par), 1e-3 * m * a_perp, tau_us);
    }
    const CMat i2 = CMat::Identity(2, 2);
    const CMat half = Eigen::kroneckerProduct(mw_unitary(1, std::numbers::pi / 2, 0, 4), i2).eval();
    const CMat full = Eigen::kroneckerProduct(mw_unitary(1, std::numbers::pi, 0, 4), i2).eval();
    const CMat u = w * full * w * half;
    CMat rho = CMat::Zero(8, 8);
    rho(4, 4) = rho(5, 5) = 0.5;  // m = -1/2, nucleus mixed
    rho = u * rho * u.adjoint();
    CMat sy = CMat::Zero(4, 4);
    sy(2, 3) = cplx(0, -1);
    sy(3, 2) = cplx(0, 1);
    return (Eigen::kroneckerProduct(sy, i2).eval() * rho).trace().real();
  };
  return echo(coupling.a_par, coupling.a_perp) / echo(0, 0);
}

Trace hahn_echo_trace(const std::vector<double>& tau_us, const std::optional<NuclearCoupling>& coupling,
                      double t2_us, double stretch, EchoBackend backend) {
  if (!std::is_sorted(tau_us.begin(), tau_us.end()))
    throw ConfigError("hahn_echo_trace: tau grid must be ascending");
  if (!(stretch > 0)) throw ConfigError("hahn_echo_trace: stretch exponent must be > 0");
  std::optional<eseem::EseemParams> p;
  if (coupling) {
    coupling->validate();
    p = eseem::EseemParams{coupling->a_par, coupling->a_perp, coupling->omega_i};
  }
  Trace t;
  t.x_label = "tau_us";
  t.y_label = "echo";
  for (double tau : tau_us) {
    double mod = 1;
    if (coupling)
      mod = backend == EchoBackend::analytic ? eseem::envelope(*p, tau) : eseem_quantum_oracle(*coupling, tau);
    const double env = (std::isfinite(t2_us) && t2_us > 0) ? std::exp(-std::pow(2 * tau / t2_us, stretch)) : 1.0;
    t.x.push_back(tau);
    t.y.push_back(mod * env);
  }
  t.meta["backend"] = backend == EchoBackend::analytic ? "analytic" : "quantum";
  return t;
}

namespace {

// Signed visibility (I(pi) - I(0)) / (I(pi) + I(0)) from a Rabi fit.
double rabi_visibility(const Trace& tr) {
  const auto [lo, hi] = std::minmax_element(tr.y.begin(), tr.y.end());
  const double mean = 0.5 * (*lo + *hi);
  if (*hi - *lo <= 1e-12 * std::max(1.0, std::abs(mean))) return 0.0;
  const fitkit::FitResult f = fitkit::fit_rabi(tr);
  const double c = f.value("offset");
  if (c == 0) return 0.0;
  const double v = -f.value("amplitude") * std::cos(f.value("phase")) / c;
  return std::clamp(v, -1.0, 1.0);
}

fitkit::Populations to_fitkit(const std::array<double, 4>& p) { return {p[3], p[2], p[1], p[0]}; }

}  // namespace

InitializationResult initialization_experiment(const std::vector<double>& tau_init_us,
                                               const spincore::SpinSystem& sys,
                                               const FineStructureModel& model,
                                               const SequenceSettings& settings) {
  if (model.variant != lindblad::Variant::ten_level)
    throw ConfigError("initialization_experiment requires the ten_level variant");
  Engine engine(sys, model, std::nullopt, settings);
  InitializationResult out;
  constexpr int kPoints = 33;
  for (double tau : tau_init_us) {
    if (!(tau >= 0) || !std::isfinite(tau)) throw ConfigError("initialization_experiment: tau must be >= 0");
    std::vector<Element> base{Laser{Channel::OFFRES, lit(40), {}}};
    if (tau > 0) base.push_back(Laser{Channel::A2, lit(tau), {Channel::MW3}});

    PulseSequence plain{base, std::nullopt};
    plain.elements.push_back(standard_readout());
    const auto sim = run(engine, plain);

    auto visibility = [&](int ch) {
      PulseSequence s{base, SweepDecl{"t", Duration{0, Unit::us},
                                      Duration{2.0 / rabi_frequency(ch, settings.mw_drive_mhz), Unit::us},
                                      kPoints}};
      s.elements.push_back(MwPulse{mw_channel(ch), Rotation{Rotation::Kind::duration, 0, sym("t")}, Phase::plus_x});
      if (ch == 2) s.elements.push_back(MwPulse{Channel::MW3, Rotation{}, Phase::plus_x});
      s.elements.push_back(standard_readout());
      return rabi_visibility(run(engine, s).signal);
    };
    fitkit::Visibilities v;
    v.v_32_12 = visibility(3);
    v.v_12_m12 = visibility(2);
    v.v_m12_m32 = visibility(1);

    fitkit::PopulationEstimate est;
    bool ok = true;
    try {
      est = fitkit::populations_from_visibilities(v);
    } catch (const fitkit::PopulationError& e) {
      est = e.estimate();
      ok = false;
    }
    out.tau_us.push_back(tau);
    out.simulated.push_back(to_fitkit(sim.populations.front()));
    out.reconstructed.push_back(est.p);
    out.visibilities.push_back(v);
    out.ordering_ok.push_back(ok && est.ordering_ok);
    if (!out.ordering_ok.back())
      out.warnings.push_back("tau_init " + format_double(tau) + " us: population ordering violated");
  }
  return out;
}

SignWitness zfs_sign_witness(const spincore::SpinSystem& sys, const FineStructureModel& model,
                             const SequenceSettings& settings) {
  if (model.variant != lindblad::Variant::ten_level)
    throw ConfigError("zfs_sign_witness requires the ten_level variant");
  PulseSequence seq;
  seq.sweep = SweepDecl{"t", Duration{0, Unit::us}, Duration{7, Unit::us}, 41};
  seq.elements.push_back(Laser{Channel::A2, lit(40), {Channel::MW3}});
  seq.elements.push_back(MwPulse{Channel::MW2, Rotation{Rotation::Kind::duration, 0, sym("t")}, Phase::plus_x});
  seq.elements.push_back(MwPulse{Channel::MW3, Rotation{}, Phase::plus_x});
  seq.elements.push_back(standard_readout());

  auto contrast = [](const Trace& t) {
    const auto [lo, hi] = std::minmax_element(t.y.begin(), t.y.end());
    return *hi - *lo;
  };
  spincore::SpinSystem flipped = sys;
  flipped.d_es = -sys.d_es;
  SignWitness w;
  w.trace_positive = simulate_sequence(seq, sys, model, std::nullopt, settings).signal;
  w.trace_negative = simulate_sequence(seq, flipped, model, std::nullopt, settings).signal;
  w.contrast_positive = contrast(w.trace_positive);
  w.contrast_negative = contrast(w.trace_negative);
  w.ratio = w.contrast_negative > 0 ? w.contrast_positive / w.contrast_negative
                                    : std::numeric_limits<double>::infinity();
  w.positive = w.contrast_positive > 10 * w.contrast_negative;
  return w;
}

Trace odmr_spectrum(const spincore::SpinSystem& sys, const std::vector<double>& freq_mhz, double drive_mhz,
                    const std::array<double, 4>& populations) {
  sys.validate();
  if (!(drive_mhz >= 0) || !std::isfinite(drive_mhz)) throw ConfigError("odmr: drive must be >= 0");
  const auto& ops = spincore::spin_matrices();
  const spincore::Mat4 sz2 = ops.sz * ops.sz;
  spincore::Mat4 rho0 = spincore::Mat4::Zero();
  for (int i = 0; i < 4; ++i) rho0(i, i) = populations[static_cast<std::size_t>(i)];
  Trace t;
  t.x_label = "mw_frequency_MHz";
  t.y_label = "population_3_2";
  for (double f : freq_mhz) {
    const spincore::Mat4 h = sys.d_gs * sz2 + (sys.gs_zeeman() - f) * ops.sz + drive_mhz * ops.sx;
    Eigen::SelfAdjointEigenSolver<spincore::Mat4> es(h);
    const spincore::Mat4 v = es.eigenvectors();
    const spincore::Mat4 r = v.adjoint() * rho0 * v;
    spincore::Mat4 avg = spincore::Mat4::Zero();
    const auto& ev = es.eigenvalues();
    for (int k = 0; k < 4; ++k)
      for (int l = 0; l < 4; ++l)
        if (std::abs(ev(k) - ev(l)) <= 1e-9 * std::max(1.0, std::abs(ev(k)))) avg(k, l) = r(k, l);
    const spincore::Mat4 rho = v * avg * v.adjoint();
    t.x.push_back(f);
    t.y.push_back(rho(0, 0).real() + rho(3, 3).real());
  }
  return t;
}

PulseSequence rabi_sequence(int channel, double t_max_us, int points) {
  if (!(t_max_us > 0)) throw ConfigError("rabi_sequence: duration must be > 0");
  PulseSequence s;
  s.sweep = SweepDecl{"t", Duration{0, Unit::us}, Duration{t_max_us, Unit::us}, points};
  s.elements.push_back(Laser{Channel::A2, lit(40), {channel == 3 ? Channel::MW1 : Channel::MW3}});
  s.elements.push_back(MwPulse{mw_channel(channel), Rotation{Rotation::Kind::duration, 0, sym("t")}, Phase::plus_x});
  if (channel == 2) s.elements.push_back(MwPulse{Channel::MW3, Rotation{}, Phase::plus_x});
  s.elements.push_back(standard_readout());
  return s;
}

PulseSequence fid_sequence(double tau_max_us, int points) {
  PulseSequence s;
  s.sweep = SweepDecl{"tau", Duration{0, Unit::us}, Duration{tau_max_us, Unit::us}, points};
  s.elements.push_back(Laser{Channel::A2, lit(40), {Channel::MW3}});
  s.elements.push_back(MwPulse{Channel::MW1, Rotation{Rotation::Kind::half_pi, 0, {}}, Phase::plus_x});
  s.elements.push_back(Wait{sym("tau")});
  s.elements.push_back(MwPulse{Channel::MW1, Rotation{Rotation::Kind::half_pi, 0, {}}, Phase::plus_x});
  s.elements.push_back(standard_readout());
  return s;
}

PulseSequence hahn_echo_sequence(double tau_max_us, int points) {
  PulseSequence s;
  s.sweep = SweepDecl{"tau", Duration{0, Unit::us}, Duration{tau_max_us, Unit::us}, points};
  s.elements.push_back(Laser{Channel::A2, lit(40), {Channel::MW3}});
  s.elements.push_back(MwPulse{Channel::MW1, Rotation{Rotation::Kind::half_pi, 0, {}}, Phase::plus_x});
  s.elements.push_back(Wait{sym("tau")});
  s.elements.push_back(MwPulse{Channel::MW1, Rotation{}, Phase::plus_x});
  s.elements.push_back(Wait{sym("tau")});
  s.elements.push_back(MwPulse{Channel::MW1, Rotation{Rotation::Kind::half_pi, 0, {}}, Phase::minus_x});
  s.elements.push_back(standard_readout());
  return s;
}

PulseSequence init_fidelity_sequence(double tau_max_us, int points) {
  PulseSequence s;
  s.sweep = SweepDecl{"tau_init", Duration{0, Unit::us}, Duration{tau_max_us, Unit::us}, points};
  s.elements.push_back(Laser{Channel::OFFRES, lit(40), {}});
  s.elements.push_back(Laser{Channel::A2, sym("tau_init"), {Channel::MW3}});
  s.elements.push_back(standard_readout());
  return s;
}

}  // namespace v1spin::pulsesim
