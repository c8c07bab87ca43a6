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

#include "v1spin/eseem.hpp"

#include <algorithm>
#include <array>
#include <memory>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

namespace v1spin::eseem {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

// kHz * us -> radians
double phase(double f_khz, double tau_us) { return kTwoPi * f_khz * tau_us * 1e-3; }

}  // namespace

void EseemParams::validate() const {
  if (!std::isfinite(a_par) || !std::isfinite(a_perp) || !std::isfinite(omega_i))
    throw ConfigError("eseem: parameters must be finite");
  if (omega_i < 0) throw ConfigError("eseem: omega_i must be >= 0");
}

Frequencies modulation_frequencies(const EseemParams& p) {
  p.validate();
  auto w = [&](double m) { return std::hypot(p.omega_i + m * p.a_par, m * p.a_perp); };
  Frequencies f;
  f.alpha = w(EseemParams::m_alpha);
  f.beta = w(EseemParams::m_beta);
  f.minus = f.alpha - f.beta;
  f.plus = f.alpha + f.beta;
  return f;
}

double modulation_depth(const EseemParams& p) {
  const Frequencies f = modulation_frequencies(p);
  if (p.a_perp == 0 || p.omega_i == 0) return std::numeric_limits<double>::infinity();
  const double r = 2 * f.alpha * f.beta / (p.a_perp * p.omega_i);
  return r * r;
}

namespace {

double envelope_at(const Frequencies& f, double k, double tau_us) {
  if (std::isinf(k)) return 1.0;
  const double bracket = 2 - 2 * std::cos(phase(f.alpha, tau_us)) - 2 * std::cos(phase(f.beta, tau_us)) +
                         std::cos(phase(f.minus, tau_us)) + std::cos(phase(f.plus, tau_us));
  return 1 - bracket / k;
}

}  // namespace

double envelope(const EseemParams& p, double tau_us) {
  return envelope_at(modulation_frequencies(p), modulation_depth(p), tau_us);
}

Trace envelope_trace(const EseemParams& p, const std::vector<double>& tau_us) {
  Trace t;
  t.x = tau_us;
  t.y.reserve(tau_us.size());
  for (double tau : tau_us) t.y.push_back(envelope(p, tau));
  t.x_label = "tau_us";
  t.y_label = "echo";
  return t;
}

double larmor_from_field(double b0_gauss) {
  return constants::kSi29GammaKhzPerGauss * std::abs(b0_gauss);
}

std::vector<SpectralPeak> echo_spectrum(const Trace& trace, std::size_t max_peaks,
                                        double relative_floor) {
  trace.validate();
  const std::size_t n = trace.size();
  if (n < 8) throw ConfigError("echo_spectrum: need at least 8 samples");
  const double dt = (trace.x.back() - trace.x.front()) / static_cast<double>(n - 1);
  if (!(dt > 0)) throw ConfigError("echo_spectrum: x must be ascending");
  for (std::size_t i = 1; i < n; ++i)
    if (std::abs(trace.x[i] - trace.x[i - 1] - dt) > 1e-6 * dt)
      throw ConfigError("echo_spectrum: sampling must be uniform");

  const double mean = std::accumulate(trace.y.begin(), trace.y.end(), 0.0) / static_cast<double>(n);
  double scale = 0;
  for (double v : trace.y) scale = std::max(scale, std::abs(v));
  std::vector<double> w(n), s(n);
  double wsum = 0;
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(kTwoPi * static_cast<double>(i) / static_cast<double>(n - 1));
    wsum += w[i];
    s[i] = (trace.y[i] - mean) * w[i];
  }

  const std::size_t half = n / 2;
  std::vector<double> mag(half + 1);
  for (std::size_t k = 0; k <= half; ++k) {
    const double step = kTwoPi * static_cast<double>(k) / static_cast<double>(n);
    const cplx rot(std::cos(step), -std::sin(step));
    cplx z(1, 0), acc(0, 0);
    for (std::size_t i = 0; i < n; ++i) {
      acc += s[i] * z;
      z *= rot;
      if ((i & 63) == 63) z /= std::abs(z);
    }
    mag[k] = 2 * std::abs(acc) / wsum;
  }

  std::vector<SpectralPeak> peaks;
  const double df = 1e3 / (static_cast<double>(n) * dt);  // kHz per bin
  for (std::size_t k = 2; k + 1 <= half; ++k) {
    const double a = mag[k - 1], b = mag[k], c = mag[k + 1];
    if (!(b > a && b >= c)) continue;
    const double den = a - 2 * b + c;
    const double d = den != 0 ? 0.5 * (a - c) / den : 0.0;
    peaks.push_back({(static_cast<double>(k) + d) * df, b - 0.25 * (a - c) * d});
  }
  std::sort(peaks.begin(), peaks.end(),
            [](const SpectralPeak& l, const SpectralPeak& r) { return l.amplitude > r.amplitude; });
  const double top = peaks.empty() ? 0.0 : peaks.front().amplitude;
  const double floor = std::max(relative_floor * top, 1e-10 * scale);
  std::erase_if(peaks, [&](const SpectralPeak& p) { return !(p.amplitude > floor); });
  if (max_peaks > 0 && peaks.size() > max_peaks) peaks.resize(max_peaks);
  return peaks;
}

void NuclearGeometry::validate() const {
  if (!(r > 0) || !std::isfinite(r)) throw ConfigError("geometry: r must be > 0");
  if (!(theta >= 0 && theta <= 90)) throw ConfigError("geometry: theta must be within [0, 90] degrees");
  if (!(eta_si > 0)) throw ConfigError("geometry: eta_si must be > 0");
}

Hyperfine hyperfine_from_geometry(const NuclearGeometry& g) {
  if (!(g.r > 0)) throw ConfigError("geometry: r must be > 0");
  const double c = 1e3 * g.eta_si / (g.r * g.r * g.r);
  const double ct = std::cos(g.theta * kDeg), st = std::sin(g.theta * kDeg);
  return {c * (3 * ct * ct - 1), c * 3 * st * ct};
}

std::vector<GeometryBranch> geometry_from_hyperfine(double a_par, double a_perp, double tolerance) {
  if (!std::isfinite(a_par) || !std::isfinite(a_perp)) throw ConfigError("geometry: non-finite hyperfine");
  if (a_par == 0 && a_perp == 0) throw ConfigError("geometry: hyperfine is zero");
  const double eta = constants::kEtaSiKhzA3 * 1e-3;
  const double perp = std::abs(a_perp);

  std::vector<GeometryBranch> out, rejected;
  for (double sign : {1.0, -1.0}) {
    if (sign < 0 && a_par == 0) continue;
    const double tp = sign * a_par;
    const double norm = std::hypot(tp, perp);
    auto residual = [&](double r, double th) {
      const Hyperfine h = hyperfine_from_geometry({r, th, eta});
      return std::hypot(h.a_par - tp, h.a_perp - perp) / norm;
    };

    double best = INFINITY, r0 = 1, th0 = 45;
    for (int i = 0; i <= 90; ++i) {
      for (int j = 0; j <= 98; ++j) {
        const double th = i;
        const double r = std::pow(50.0, j / 98.0);  // 1 .. 50 Angstrom
        const double v = residual(r, th);
        if (v < best) {
          best = v;
          r0 = r;
          th0 = th;
        }
      }
    }

    const std::vector<double> xs{0.0, 1.0};
    const std::vector<double> ys{tp / norm, perp / norm};
    fitkit::LmProblem pb;
    pb.x = xs;
    pb.y = ys;
    pb.model = [&](double x, std::span<const double> q) {
      const Hyperfine h = hyperfine_from_geometry({std::abs(q[0]), q[1], eta});
      return (x == 0 ? h.a_par : h.a_perp) / norm;
    };
    pb.p0 = {r0, th0};
    pb.scale = {r0, 10.0};
    const auto sol = fitkit::levenberg_marquardt(pb);

    double r = std::abs(sol.p[0]);
    double th = std::fmod(std::abs(sol.p[1]), 180.0);
    if (th > 90) th = 180 - th;
    GeometryBranch b{{r, th, eta}, sign, residual(r, th)};
    (b.residual <= tolerance ? out : rejected).push_back(b);
  }
  if (out.empty()) {
    std::ostringstream os;
    os << "geometry_from_hyperfine: no solution within tolerance " << tolerance << "; best candidates:";
    for (const auto& b : rejected)
      os << " (r=" << b.geometry.r << " A, theta=" << b.geometry.theta << " deg, residual=" << b.residual << ")";
    throw FitError(os.str());
  }
  return out;
}

Trace normalize_echo(const Trace& trace, NormalizeMode mode) {
  const auto fit = fitkit::fit_decay(trace, fitkit::DecayKind::stretched_echo);
  const double a = fit.value("amplitude");
  const double t = fit.value("T");
  const double n = fit.derived.at("exponent");
  Trace out = trace;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const double d = a * std::exp(-std::pow(std::abs(trace.x[i]) / t, n));
    out.y[i] = mode == NormalizeMode::divide ? trace.y[i] / d : 1 + (trace.y[i] - d) / a;
  }
  out.sigma.clear();
  out.y_label = "echo_normalized";
  // Fitted against tau; the echo decays in the total time 2 tau.
  out.meta["t2_us"] = format_double(2 * t);
  out.meta["stretch"] = format_double(n);
  out.meta["normalization"] = mode == NormalizeMode::divide ? "divide" : "subtract";
  return out;
}

fitkit::FitResult fit_envelope(const Trace& tr, double omega_i) {
  tr.validate();
  if (tr.size() < 8) throw FitError("fit_envelope: need at least 8 samples");
  if (!(omega_i > 0)) throw ConfigError("fit_envelope: omega_i must be > 0");
  const double n = static_cast<double>(tr.size());
  const double mean = std::accumulate(tr.y.begin(), tr.y.end(), 0.0) / n;
  double var = 0;
  for (double v : tr.y) var += (v - mean) * (v - mean);
  if (std::sqrt(var / n) <= 1e-9) throw FitError("fit_envelope: no modulation detected");

  std::vector<std::array<double, 2>> starts;
  std::vector<SpectralPeak> peaks;
  try {
    peaks = echo_spectrum(tr, 4);
  } catch (const ConfigError&) {
  }
  if (peaks.empty()) throw FitError("fit_envelope: no modulation detected");
  // Invert w_a, w_b for (A_par, A_perp) with m = -3/2, -1/2.
  for (const auto& pa : peaks) {
    for (const auto& pb : peaks) {
      if (&pa == &pb) continue;
      const double wa2 = pa.frequency * pa.frequency, wb2 = pb.frequency * pb.frequency;
      const double ap = (wa2 - 9 * wb2 + 8 * omega_i * omega_i) / (6 * omega_i);
      const double q = wb2 - (omega_i - 0.5 * ap) * (omega_i - 0.5 * ap);
      if (q > 0) starts.push_back({ap, 2 * std::sqrt(q)});
    }
  }
  // Coarse grid as a fallback when peak pairs are blurred by the window.
  for (int i = -40; i <= 40; ++i)
    for (int j = 1; j <= 40; ++j) starts.push_back({i * omega_i / 20.0, j * omega_i / 20.0});

  fitkit::LmProblem pb;
  pb.x = tr.x;
  pb.y = tr.y;
  if (tr.has_sigma()) pb.sigma = tr.sigma;
  // The model is called point by point; reuse the frequencies per parameter set.
  struct Cache {
    double a = NAN, b = NAN, k = 0;
    Frequencies f;
  };
  auto cache = std::make_shared<Cache>();
  pb.model = [omega_i, cache](double x, std::span<const double> q) {
    if (q[0] != cache->a || q[1] != cache->b) {
      const EseemParams p{q[0], q[1], omega_i};
      cache->a = q[0];
      cache->b = q[1];
      cache->f = modulation_frequencies(p);
      cache->k = modulation_depth(p);
    }
    return envelope_at(cache->f, cache->k, x);
  };
  pb.scale = {omega_i, omega_i};

  // Rank starts by their initial misfit and refine the most promising few.
  auto misfit = [&](const std::array<double, 2>& s) {
    const EseemParams p{s[0], s[1], omega_i};
    const Frequencies f = modulation_frequencies(p);
    const double k = modulation_depth(p);
    double r = 0;
    const std::size_t stride = tr.size() > 200 ? 2 : 1;
    for (std::size_t i = 0; i < tr.size(); i += stride) {
      const double d = tr.y[i] - envelope_at(f, k, tr.x[i]);
      r += d * d;
    }
    return r;
  };
  std::vector<std::pair<double, std::array<double, 2>>> ranked;
  for (const auto& s : starts) ranked.emplace_back(misfit(s), s);
  std::sort(ranked.begin(), ranked.end(), [](const auto& l, const auto& r) { return l.first < r.first; });
  starts.clear();
  for (std::size_t i = 0; i < std::min<std::size_t>(5, ranked.size()); ++i) starts.push_back(ranked[i].second);

  fitkit::LmSolution best;
  best.rss = INFINITY;
  for (const auto& s : starts) {
    pb.p0 = {s[0], s[1]};
    const auto sol = fitkit::levenberg_marquardt(pb);
    if (std::isfinite(sol.rss) && sol.rss < best.rss) best = sol;
  }
  if (!std::isfinite(best.rss)) throw FitError("fit_envelope: no start converged");

  fitkit::FitResult out;
  out.names = {"a_par", "a_perp"};
  out.units = {"kHz", "kHz"};
  out.values = {best.p[0], std::abs(best.p[1])};
  out.errors = best.errors;
  out.rss = best.rss;
  out.converged = best.converged;
  out.iterations = best.iterations;
  out.derived["k"] = modulation_depth({out.values[0], out.values[1], omega_i});
  out.derived["rms"] = std::sqrt(best.rss / n);
  out.derived["omega_i"] = omega_i;
  if (!best.converged) out.flags.push_back("not_converged");
  return out;
}

}  // namespace v1spin::eseem
