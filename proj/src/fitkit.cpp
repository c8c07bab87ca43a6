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

#include "v1spin/fitkit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Dense>

namespace v1spin::fitkit {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kPi = std::numbers::pi;

double weight(const LmProblem& pb, std::size_t i) {
  return pb.sigma.empty() ? 1.0 : 1.0 / pb.sigma[i];
}

double residual_ss(const LmProblem& pb, std::span<const double> p) {
  double s = 0;
  for (std::size_t i = 0; i < pb.x.size(); ++i) {
    const double r = (pb.y[i] - pb.model(pb.x[i], p)) * weight(pb, i);
    s += r * r;
  }
  return s;
}

// Weighted residuals and Jacobian of the model (not of the residual).
void linearize(const LmProblem& pb, std::span<const double> p, VectorXd& r, MatrixXd& j) {
  const std::size_t n = pb.x.size();
  const std::size_t m = p.size();
  r.resize(static_cast<Eigen::Index>(n));
  j.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  std::vector<double> grad(m);
  std::vector<double> pp(p.begin(), p.end());
  for (std::size_t i = 0; i < n; ++i) {
    const double w = weight(pb, i);
    const auto ii = static_cast<Eigen::Index>(i);
    r(ii) = (pb.y[i] - pb.model(pb.x[i], p)) * w;
    if (pb.gradient) {
      pb.gradient(pb.x[i], p, grad);
    } else {
      for (std::size_t k = 0; k < m; ++k) {
        const double sc = pb.scale.empty() ? std::max(1.0, std::abs(p[k])) : pb.scale[k];
        const double h = 1e-6 * sc;
        pp[k] = p[k] + h;
        const double fp = pb.model(pb.x[i], pp);
        pp[k] = p[k] - h;
        const double fm = pb.model(pb.x[i], pp);
        pp[k] = p[k];
        grad[k] = (fp - fm) / (2 * h);
      }
    }
    for (std::size_t k = 0; k < m; ++k) j(ii, static_cast<Eigen::Index>(k)) = grad[k] * w;
  }
}

FitResult make_result(std::vector<std::string> names, std::vector<std::string> units,
                      const LmSolution& sol) {
  FitResult out;
  out.names = std::move(names);
  out.units = std::move(units);
  out.values = sol.p;
  out.errors = sol.errors;
  out.rss = sol.rss;
  out.converged = sol.converged;
  out.iterations = sol.iterations;
  return out;
}

void require_finite(const Trace& t) {
  t.validate();
  for (std::size_t i = 0; i < t.size(); ++i)
    if (!std::isfinite(t.x[i]) || !std::isfinite(t.y[i]))
      throw FitError("trace contains non-finite samples");
  for (double s : t.sigma)
    if (!(s > 0)) throw FitError("sigma values must be positive");
}

LmProblem problem_for(const Trace& t) {
  LmProblem pb;
  pb.x = t.x;
  pb.y = t.y;
  pb.sigma = t.sigma;
  return pb;
}

// Half-maximum crossings of y - base around index `peak`, linearly
// interpolated. Returns the full width or a fallback.
double half_width_estimate(std::span<const double> x, std::span<const double> y, double base,
                           std::size_t peak, double fallback) {
  const double half = base + 0.5 * (y[peak] - base);
  double left = std::numeric_limits<double>::quiet_NaN();
  double right = left;
  for (std::size_t i = peak; i > 0; --i) {
    if (y[i - 1] <= half) {
      const double t = (half - y[i - 1]) / (y[i] - y[i - 1]);
      left = x[i - 1] + t * (x[i] - x[i - 1]);
      break;
    }
  }
  for (std::size_t i = peak; i + 1 < y.size(); ++i) {
    if (y[i + 1] <= half) {
      const double t = (y[i] - half) / (y[i] - y[i + 1]);
      right = x[i] + t * (x[i + 1] - x[i]);
      break;
    }
  }
  if (std::isfinite(left) && std::isfinite(right)) return right - left;
  if (std::isfinite(left)) return 2 * (x[peak] - left);
  if (std::isfinite(right)) return 2 * (right - x[peak]);
  return fallback;
}

}  // namespace

double FitResult::value(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return values[i];
  if (auto it = derived.find(name); it != derived.end()) return it->second;
  throw FitError("fit result has no parameter '" + name + "'");
}

double FitResult::error(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name)
      return errors.empty() ? std::numeric_limits<double>::quiet_NaN() : errors[i];
  throw FitError("fit result has no parameter '" + name + "'");
}

bool FitResult::has_flag(const std::string& flag) const {
  return std::find(flags.begin(), flags.end(), flag) != flags.end();
}

std::vector<std::vector<double>> numeric_jacobian(const LmProblem& problem,
                                                  std::span<const double> p) {
  LmProblem fd = problem;
  fd.gradient = nullptr;
  fd.sigma = {};
  VectorXd r;
  MatrixXd j;
  linearize(fd, p, r, j);
  std::vector<std::vector<double>> out(static_cast<std::size_t>(j.rows()));
  for (Eigen::Index i = 0; i < j.rows(); ++i)
    for (Eigen::Index k = 0; k < j.cols(); ++k) out[static_cast<std::size_t>(i)].push_back(j(i, k));
  return out;
}

LmSolution levenberg_marquardt(const LmProblem& pb, const LmOptions& opt) {
  const std::size_t m = pb.p0.size();
  if (m == 0) throw FitError("no parameters to fit");
  if (pb.x.size() != pb.y.size()) throw FitError("x and y lengths differ");
  if (pb.x.size() < m) throw FitError("fewer samples than parameters");

  LmSolution sol;
  sol.p = pb.p0;
  VectorXd r;
  MatrixXd j;
  linearize(pb, sol.p, r, j);
  double rss = r.squaredNorm();
  if (!std::isfinite(rss)) throw FitError("model is not finite at the initial guess");
  double lambda = opt.lambda0;
  std::vector<double> trial(m);

  int it = 0;
  for (; it < opt.max_iterations; ++it) {
    if (rss == 0.0) {
      sol.converged = true;
      break;
    }
    const MatrixXd a = j.transpose() * j;
    const VectorXd g = j.transpose() * r;
    const double dmax = a.diagonal().maxCoeff();
    if (g.lpNorm<Eigen::Infinity>() <= opt.gtol * std::max(dmax, 1e-300)) {
      sol.converged = true;
      break;
    }
    bool accepted = false;
    while (lambda < 1e20) {
      MatrixXd damped = a;
      for (Eigen::Index k = 0; k < damped.rows(); ++k)
        damped(k, k) += lambda * std::max(a(k, k), 1e-12 * dmax);
      const VectorXd step = damped.ldlt().solve(g);
      for (std::size_t k = 0; k < m; ++k) trial[k] = sol.p[k] + step(static_cast<Eigen::Index>(k));
      const double rss_new = residual_ss(pb, trial);
      if (std::isfinite(rss_new) && rss_new < rss) {
        const double pnorm = Eigen::Map<const VectorXd>(sol.p.data(), static_cast<Eigen::Index>(m)).norm();
        const bool small_step = step.norm() <= opt.xtol * (pnorm + opt.xtol);
        const bool small_drop = (rss - rss_new) <= opt.ftol * rss;
        sol.p = trial;
        rss = rss_new;
        linearize(pb, sol.p, r, j);
        lambda = std::max(lambda / 10.0, 1e-15);
        accepted = true;
        if (small_step || small_drop) sol.converged = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!accepted) {
      // No downhill step at any damping: stationary to working precision.
      sol.converged = true;
      break;
    }
    if (sol.converged) break;
  }
  sol.iterations = it;
  sol.rss = rss;

  const MatrixXd a = j.transpose() * j;
  Eigen::JacobiSVD<MatrixXd> svd(a);
  const auto& s = svd.singularValues();
  const auto n = static_cast<double>(pb.x.size());
  if (s(0) > 0 && s(s.size() - 1) > 1e-14 * s(0)) {
    const double dof = n > static_cast<double>(m) ? n - static_cast<double>(m) : 1.0;
    const double s2 = pb.sigma.empty() ? rss / dof : 1.0;
    const MatrixXd cov = a.inverse() * s2;
    for (std::size_t k = 0; k < m; ++k)
      sol.errors.push_back(std::sqrt(std::max(0.0, cov(static_cast<Eigen::Index>(k),
                                                       static_cast<Eigen::Index>(k)))));
  }
  return sol;
}

// ---- Lorentzian -------------------------------------------------------------

double lorentzian_model(double x, std::span<const double> p) {
  double v = p[0];
  for (std::size_t k = 1; k + 2 < p.size(); k += 3) {
    const double u = x - p[k];
    const double g = 0.5 * p[k + 1];
    v += p[k + 2] * g * g / (u * u + g * g);
  }
  return v;
}

void lorentzian_gradient(double x, std::span<const double> p, std::span<double> d) {
  d[0] = 1.0;
  for (std::size_t k = 1; k + 2 < p.size(); k += 3) {
    const double u = x - p[k];
    const double g = 0.5 * p[k + 1];
    const double a = p[k + 2];
    const double den = u * u + g * g;
    d[k] = a * g * g * 2 * u / (den * den);
    d[k + 1] = 0.5 * (2 * a * g * u * u / (den * den));
    d[k + 2] = g * g / den;
  }
}

FitResult fit_lorentzian(const Trace& trace, int n_peaks) {
  if (n_peaks != 1 && n_peaks != 2) throw FitError("fit_lorentzian: n_peaks must be 1 or 2");
  require_finite(trace);
  const std::size_t need = static_cast<std::size_t>(5 * (3 * n_peaks + 1));
  if (trace.size() < need)
    throw FitError("fit_lorentzian: need at least " + std::to_string(need) + " points");

  std::vector<std::string> names{"offset"};
  std::vector<std::string> units{trace.y_label};
  for (int k = 1; k <= n_peaks; ++k) {
    const std::string s = std::to_string(k);
    names.insert(names.end(), {"center" + s, "fwhm" + s, "amplitude" + s});
    units.insert(units.end(), {trace.x_label, trace.x_label, trace.y_label});
  }

  const auto [ymin_it, ymax_it] = std::minmax_element(trace.y.begin(), trace.y.end());
  const double ymin = *ymin_it;
  const double ymax = *ymax_it;
  const double span_x = trace.x.back() - trace.x.front();
  if (ymax - ymin <= 1e-12 * std::max(1.0, std::abs(ymax))) {
    FitResult flat;
    flat.names = names;
    flat.units = units;
    const double mean = std::accumulate(trace.y.begin(), trace.y.end(), 0.0) /
                        static_cast<double>(trace.size());
    flat.values.assign(names.size(), 0.0);
    flat.values[0] = mean;
    for (int k = 0; k < n_peaks; ++k)
      flat.values[static_cast<std::size_t>(1 + 3 * k)] = trace.x.front() + 0.5 * span_x;
    flat.converged = true;
    flat.flags.push_back("degenerate");
    return flat;
  }

  // Moment-style seeds: baseline = minimum, peaks from maxima and half widths.
  std::vector<double> p0{ymin};
  std::vector<double> resid(trace.y.begin(), trace.y.end());
  for (int k = 0; k < n_peaks; ++k) {
    const auto peak = static_cast<std::size_t>(
        std::max_element(resid.begin(), resid.end()) - resid.begin());
    const double w = std::abs(half_width_estimate(trace.x, resid, ymin, peak, span_x / 10));
    const double amp = resid[peak] - ymin;
    p0.insert(p0.end(), {trace.x[peak], std::max(w, 1e-9 * std::abs(span_x)), amp});
    const std::vector<double> single{0.0, trace.x[peak], p0[p0.size() - 2], amp};
    for (std::size_t i = 0; i < resid.size(); ++i)
      resid[i] -= lorentzian_model(trace.x[i], single);
  }

  LmProblem pb = problem_for(trace);
  pb.model = lorentzian_model;
  pb.gradient = lorentzian_gradient;
  pb.p0 = p0;
  LmSolution sol = levenberg_marquardt(pb);
  if (!sol.converged)
    throw FitError("fit_lorentzian: no convergence, last centre " + format_double(sol.p[1]));
  for (int k = 0; k < n_peaks; ++k) {
    double& w = sol.p[static_cast<std::size_t>(2 + 3 * k)];
    w = std::abs(w);
  }
  if (n_peaks == 2 && sol.p[4] < sol.p[1]) {
    std::swap_ranges(sol.p.begin() + 1, sol.p.begin() + 4, sol.p.begin() + 4);
    if (!sol.errors.empty())
      std::swap_ranges(sol.errors.begin() + 1, sol.errors.begin() + 4, sol.errors.begin() + 4);
  }
  FitResult out = make_result(names, units, sol);
  if (n_peaks == 2) out.derived["separation"] = out.values[4] - out.values[1];
  return out;
}

// ---- g2 -----------------------------------------------------------------------

double g2_model(double tau, double n, double beta, double tau1, double tau2) {
  const double t = std::abs(tau);
  return (1.0 - beta * std::exp(-t / tau1) - (1.0 - beta) * std::exp(-t / tau2)) / n +
         (n - 1.0) / n;
}

FitResult fit_g2(const Trace& trace) {
  require_finite(trace);
  if (trace.size() < 20) throw FitError("fit_g2: need at least 20 points");
  double tmax = 0;
  for (double x : trace.x) tmax = std::max(tmax, std::abs(x));
  if (!(tmax > 0)) throw FitError("fit_g2: delay axis is degenerate");
  const double g0 = *std::min_element(trace.y.begin(), trace.y.end());
  if (!(g0 < 1.0)) throw FitError("fit_g2: no antibunching dip below 1");
  const double n0 = 1.0 / (1.0 - g0);

  LmProblem pb = problem_for(trace);
  pb.model = [](double x, std::span<const double> p) { return g2_model(x, p[0], p[1], p[2], p[3]); };
  pb.gradient = [](double x, std::span<const double> p, std::span<double> d) {
    const double t = std::abs(x);
    const double n = p[0], b = p[1], t1 = p[2], t2 = p[3];
    const double e1 = std::exp(-t / t1);
    const double e2 = std::exp(-t / t2);
    const double core = 1.0 - b * e1 - (1.0 - b) * e2;
    // f = core / n + 1 - 1/n
    d[0] = -core / (n * n) + 1.0 / (n * n);
    d[1] = (-e1 + e2) / n;
    d[2] = -b * e1 * t / (t1 * t1) / n;
    d[3] = -(1.0 - b) * e2 * t / (t2 * t2) / n;
  };

  LmSolution best;
  best.rss = std::numeric_limits<double>::infinity();
  for (double f1 : {0.003, 0.01, 0.03}) {
    for (double f2 : {0.1, 0.3, 1.0}) {
      for (double b : {0.5, 0.9}) {
        pb.p0 = {n0, b, f1 * tmax, f2 * tmax};
        LmSolution s;
        try {
          s = levenberg_marquardt(pb);
        } catch (const FitError&) {
          continue;
        }
        if (std::isfinite(s.rss) && s.rss < best.rss) best = s;
      }
    }
  }
  if (!std::isfinite(best.rss)) throw FitError("fit_g2: all starts failed");
  auto& p = best.p;
  p[2] = std::abs(p[2]);
  p[3] = std::abs(p[3]);
  if (p[2] > p[3]) {
    std::swap(p[2], p[3]);
    p[1] = 1.0 - p[1];
    if (!best.errors.empty()) std::swap(best.errors[2], best.errors[3]);
  }
  FitResult out = make_result({"N", "beta", "tau1", "tau2"}, {"", "", trace.x_label, trace.x_label},
                              best);
  out.derived["g2_0"] = (p[0] - 1.0) / p[0];
  if (std::abs(p[2] - p[3]) <= 1e-3 * std::max(p[2], p[3]) || best.errors.empty())
    out.flags.push_back("tau_degenerate");
  if (single_emitter(out.derived["g2_0"])) out.flags.push_back("single_emitter");
  if (!best.converged) throw FitError("fit_g2: no convergence");
  return out;
}

// ---- populations ------------------------------------------------------------------

Visibilities visibilities_from_populations(const Populations& p) {
  double sum = 0;
  for (double v : p) {
    if (!(v >= -1e-15)) throw ConfigError("populations must be non-negative");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("populations must sum to 1");
  const double a = p[0], b = p[1], c = p[2], d = p[3];
  const double den1 = 2 * a + c + d;
  const double den2 = 2 * a + b + c;
  const double den3 = 2 * d + a + b;
  // A vanishing denominator means no signal in either arm of that Rabi
  // experiment: no fringe, visibility 0.
  auto ratio = [](double num, double den) {
    if (den > 0) return num / den;
    if (num != 0) throw ConfigError("visibility denominator is zero");
    return 0.0;
  };
  return {ratio(c - d, den1), ratio(b - c, den2), ratio(b - a, den3)};
}

PopulationEstimate solve_populations(const Visibilities& v) {
  for (double x : {v.v_32_12, v.v_12_m12, v.v_m12_m32})
    if (!(x >= -1.0 && x <= 1.0)) throw ConfigError("visibilities must lie in [-1, 1]");
  const double v1 = v.v_32_12, v2 = v.v_12_m12, v3 = v.v_m12_m32;
  Eigen::Matrix4d m;
  m << 2 * v1, 0, v1 - 1, v1 + 1,
       2 * v2, v2 - 1, v2 + 1, 0,
       v3 + 1, v3 - 1, 0, 2 * v3,
       1, 1, 1, 1;
  const Eigen::Vector4d rhs(0, 0, 0, 1);
  Eigen::JacobiSVD<Eigen::Matrix4d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  PopulationEstimate est;
  est.condition = s(3) > 0 ? s(0) / s(3) : std::numeric_limits<double>::infinity();
  const Eigen::Vector4d p = svd.solve(rhs);
  for (int i = 0; i < 4; ++i) est.p[static_cast<std::size_t>(i)] = p(i);
  if (!(est.condition <= 1e10))
    throw PopulationError("visibility system is singular (condition " +
                              format_double(est.condition) + ")",
                          est);
  const double tol = 1e-9;
  est.ordering_ok = std::max(est.p[0], est.p[3]) <= est.p[2] + tol && est.p[2] <= est.p[1] + tol;
  for (double x : est.p)
    if (x < -tol) est.ordering_ok = false;
  return est;
}

PopulationEstimate populations_from_visibilities(const Visibilities& v) {
  PopulationEstimate est = solve_populations(v);
  if (!est.ordering_ok)
    throw PopulationError(
        "population ordering p(+-3/2) <= p(+1/2) <= p(-1/2) violated; unconstrained solution (" +
            format_double(est.p[0]) + ", " + format_double(est.p[1]) + ", " +
            format_double(est.p[2]) + ", " + format_double(est.p[3]) + ")",
        est);
  return est;
}

// ---- Rabi ---------------------------------------------------------------------------

FitResult fit_rabi(const Trace& trace) {
  require_finite(trace);
  const std::size_t n = trace.size();
  if (n < 8) throw FitError("fit_rabi: need at least 8 points");
  const double t0 = trace.x.front();
  const double span = trace.x.back() - t0;
  if (!(span > 0)) throw FitError("fit_rabi: time axis must be increasing");
  const double mean = std::accumulate(trace.y.begin(), trace.y.end(), 0.0) / static_cast<double>(n);
  double dev = 0;
  for (double y : trace.y) dev = std::max(dev, std::abs(y - mean));
  if (dev <= 1e-12 * std::max(1.0, std::abs(mean)))
    throw FitError("fit_rabi: no spectral peak above floor (constant trace)");

  // Zero-padded DFT magnitude (explicit sum; handles non-uniform x).
  const double df = 1.0 / (8.0 * span);
  const double fmax = 0.5 * static_cast<double>(n - 1) / span;
  double best_f = 0;
  double best_mag = 0;
  for (double f = df; f <= fmax; f += df) {
    double re = 0, im = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double ph = kTwoPi * f * (trace.x[i] - t0);
      re += (trace.y[i] - mean) * std::cos(ph);
      im += (trace.y[i] - mean) * std::sin(ph);
    }
    const double mag = std::hypot(re, im);
    if (mag > best_mag) {
      best_mag = mag;
      best_f = f;
    }
  }
  if (best_f == 0) throw FitError("fit_rabi: no spectral peak above floor");

  // Linear seed for offset, cos and sin at the DFT frequency.
  Eigen::MatrixXd a(static_cast<Eigen::Index>(n), 3);
  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const double ph = kTwoPi * best_f * (trace.x[i] - t0);
    a(ii, 0) = 1.0;
    a(ii, 1) = std::cos(ph);
    a(ii, 2) = std::sin(ph);
    y(ii) = trace.y[i];
  }
  const Eigen::Vector3d c = a.colPivHouseholderQr().solve(y);
  const double amp0 = std::hypot(c(1), c(2));
  const double phase0 = std::atan2(-c(2), c(1));

  LmProblem pb = problem_for(trace);
  pb.model = [t0](double x, std::span<const double> p) {
    return p[3] + p[1] * std::cos(kTwoPi * p[0] * (x - t0) + p[2]);
  };
  pb.gradient = [t0](double x, std::span<const double> p, std::span<double> d) {
    const double ph = kTwoPi * p[0] * (x - t0) + p[2];
    const double s = std::sin(ph);
    d[0] = -p[1] * s * kTwoPi * (x - t0);
    d[1] = std::cos(ph);
    d[2] = -p[1] * s;
    d[3] = 1.0;
  };
  pb.p0 = {best_f, amp0, phase0, c(0)};
  LmSolution sol = levenberg_marquardt(pb);
  if (!sol.converged) throw FitError("fit_rabi: no convergence");
  if (sol.p[1] < 0) {
    sol.p[1] = -sol.p[1];
    sol.p[2] += kPi;
  }
  sol.p[2] = std::remainder(sol.p[2], kTwoPi);
  // Report the phase relative to x = 0.
  sol.p[2] = std::remainder(sol.p[2] - kTwoPi * sol.p[0] * t0, kTwoPi);
  const std::string inv = "1/" + trace.x_label;
  FitResult out = make_result({"frequency", "amplitude", "phase", "offset"},
                              {inv, trace.y_label, "rad", trace.y_label}, sol);
  out.derived["visibility"] = sol.p[3] != 0 ? sol.p[1] / sol.p[3] : 0.0;
  out.derived["i_max"] = sol.p[3] + sol.p[1];
  out.derived["i_min"] = sol.p[3] - sol.p[1];
  if (sol.p[0] * span < 2.0) out.flags.push_back("under_two_periods");
  return out;
}

// ---- decays ---------------------------------------------------------------------------

DecayKind decay_kind_from_string(const std::string& s) {
  if (s == "gaussian_fid") return DecayKind::gaussian_fid;
  if (s == "stretched_echo") return DecayKind::stretched_echo;
  if (s == "exponential") return DecayKind::exponential;
  throw ConfigError("unknown decay kind '" + s + "' (gaussian_fid, stretched_echo, exponential)");
}

std::string to_string(DecayKind kind) {
  switch (kind) {
    case DecayKind::gaussian_fid: return "gaussian_fid";
    case DecayKind::stretched_echo: return "stretched_echo";
    case DecayKind::exponential: return "exponential";
  }
  return "?";
}

FitResult fit_decay(const Trace& trace, DecayKind kind) {
  require_finite(trace);
  const std::size_t n = trace.size();
  if (n < 5) throw FitError("fit_decay: need at least 5 points");
  const std::size_t q = std::max<std::size_t>(1, n / 4);
  double head = 0, tail = 0;
  for (std::size_t i = 0; i < q; ++i) {
    head += trace.y[i];
    tail += trace.y[n - 1 - i];
  }
  if (tail > head) throw FitError("fit_decay: trace increases; expected a decay");
  if (!(trace.y.front() > 0)) throw FitError("fit_decay: trace must start positive");

  const double a0 = *std::max_element(trace.y.begin(), trace.y.end());
  // Log-linear seeds on the usable part of the curve.
  std::vector<double> lt, lz;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = trace.y[i] / a0;
    if (trace.x[i] > 0 && r > 1e-6 && r < 1.0 - 1e-9) {
      lt.push_back(std::log(trace.x[i]));
      lz.push_back(std::log(-std::log(r)));
    }
  }
  double n_seed = kind == DecayKind::gaussian_fid ? 2.0 : kind == DecayKind::exponential ? 1.0 : 3.0;
  double t_seed = 0.5 * (trace.x.back() - trace.x.front());
  if (lt.size() >= 2) {
    // ln(-ln(y/A)) = n ln t - n ln T
    const double mt = std::accumulate(lt.begin(), lt.end(), 0.0) / static_cast<double>(lt.size());
    const double mz = std::accumulate(lz.begin(), lz.end(), 0.0) / static_cast<double>(lz.size());
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < lt.size(); ++i) {
      sxx += (lt[i] - mt) * (lt[i] - mt);
      sxy += (lt[i] - mt) * (lz[i] - mz);
    }
    if (kind == DecayKind::stretched_echo && sxx > 0 && sxy / sxx > 0.2) n_seed = sxy / sxx;
    t_seed = std::exp(mt - mz / n_seed);
  }

  LmProblem pb = problem_for(trace);
  const bool free_n = kind == DecayKind::stretched_echo;
  const double fixed_n = n_seed;
  pb.model = [free_n, fixed_n](double x, std::span<const double> p) {
    const double nn = free_n ? p[2] : fixed_n;
    return p[0] * std::exp(-std::pow(std::abs(x / p[1]), nn));
  };
  pb.gradient = [free_n, fixed_n](double x, std::span<const double> p, std::span<double> d) {
    const double nn = free_n ? p[2] : fixed_n;
    const double u = std::abs(x / p[1]);
    const double un = std::pow(u, nn);
    const double e = std::exp(-un);
    d[0] = e;
    d[1] = p[0] * e * nn * un / p[1];
    if (free_n) d[2] = u > 0 ? -p[0] * e * un * std::log(u) : 0.0;
  };
  pb.p0 = {a0, t_seed};
  if (free_n) pb.p0.push_back(n_seed);
  LmSolution sol = levenberg_marquardt(pb);
  if (!sol.converged) throw FitError("fit_decay: no convergence");
  sol.p[1] = std::abs(sol.p[1]);
  std::vector<std::string> names{"amplitude", "T"};
  std::vector<std::string> units{trace.y_label, trace.x_label};
  if (free_n) {
    names.push_back("n");
    units.push_back("");
  }
  FitResult out = make_result(names, units, sol);
  out.derived["exponent"] = free_n ? sol.p[2] : fixed_n;
  return out;
}

// ---- polarization -------------------------------------------------------------------------

FitResult fit_polarization(std::span<const double> angles_deg, std::span<const double> intensities) {
  const std::size_t n = angles_deg.size();
  if (n != intensities.size()) throw FitError("fit_polarization: length mismatch");
  if (n < 4) throw FitError("fit_polarization: need at least 4 angles");
  const auto [lo, hi] = std::minmax_element(angles_deg.begin(), angles_deg.end());
  if (*hi - *lo < 180.0 - 1e-9)
    throw FitError("fit_polarization: angles must span at least 180 degrees");

  constexpr double kDeg = kPi / 180.0;
  Eigen::MatrixXd a(static_cast<Eigen::Index>(n), 3);
  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    a(ii, 0) = 1.0;
    a(ii, 1) = std::cos(4 * angles_deg[i] * kDeg);
    a(ii, 2) = std::sin(4 * angles_deg[i] * kDeg);
    y(ii) = intensities[i];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  qr.setThreshold(1e-10);
  if (qr.rank() < 3) throw FitError("fit_polarization: rank-deficient angle sampling");
  const Eigen::Vector3d c = qr.solve(y);
  const double amp = 2 * std::hypot(c(1), c(2));
  const double phi0 = std::atan2(c(2), c(1)) / 4.0 / kDeg;

  LmProblem pb;
  pb.x = angles_deg;
  pb.y = intensities;
  pb.model = [](double x, std::span<const double> p) {
    const double cc = std::cos(2 * (x - p[1]) * kDeg);
    return p[0] * cc * cc + p[2];
  };
  pb.gradient = [](double x, std::span<const double> p, std::span<double> d) {
    const double arg = 2 * (x - p[1]) * kDeg;
    const double cc = std::cos(arg);
    d[0] = cc * cc;
    d[1] = p[0] * 2 * cc * std::sin(arg) * 2 * kDeg;
    d[2] = 1.0;
  };
  pb.p0 = {amp, phi0, c(0) - 0.5 * amp};
  LmSolution sol = levenberg_marquardt(pb);
  if (!sol.converged) throw FitError("fit_polarization: no convergence");
  if (sol.p[0] < 0) {
    // -A cos^2 + C == A cos^2(.. + 45 deg) + C - A
    sol.p[2] += sol.p[0];
    sol.p[0] = -sol.p[0];
    sol.p[1] += 45.0;
  }
  sol.p[1] = std::fmod(sol.p[1], 90.0);
  if (sol.p[1] < 0) sol.p[1] += 90.0;
  FitResult out = make_result({"A", "phi0", "C"}, {"", "deg", ""}, sol);
  const double den = sol.p[0] + 2 * sol.p[2];
  out.derived["contrast"] = den != 0 ? sol.p[0] / den : 0.0;
  return out;
}

}  // namespace v1spin::fitkit
