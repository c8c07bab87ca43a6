#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "v1spin/fitkit.hpp"

using namespace v1spin;
using namespace v1spin::fitkit;

namespace {

Trace sample(const std::vector<double>& x, const std::function<double(double)>& f) {
  Trace t;
  t.x = x;
  for (double v : x) t.y.push_back(f(v));
  return t;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST_CASE("analytic Lorentzian gradient matches central differences") {
  const std::vector<double> x = linspace(-200, 200, 41);
  const std::vector<double> y(x.size(), 0.0);
  LmProblem pb;
  pb.x = x;
  pb.y = y;
  pb.model = lorentzian_model;
  const std::vector<double> p{0.3, 10.0, 87.6, 2.0, -40.0, 20.0, 1.0};
  const auto num = numeric_jacobian(pb, p);
  std::vector<double> g(p.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    lorentzian_gradient(x[i], p, g);
    for (std::size_t k = 0; k < p.size(); ++k)
      CHECK(std::abs(g[k] - num[i][k]) <= 1e-4 * std::max(1.0, std::abs(g[k])));
  }
}

TEST_CASE("LM solves a linear problem in one accepted step family") {
  const std::vector<double> x = linspace(0, 1, 11);
  std::vector<double> y;
  for (double v : x) y.push_back(1.5 - 2.0 * v);
  LmProblem pb;
  pb.x = x;
  pb.y = y;
  pb.model = [](double v, std::span<const double> p) { return p[0] + p[1] * v; };
  pb.p0 = {0.0, 0.0};
  const LmSolution s = levenberg_marquardt(pb);
  CHECK(s.converged);
  CHECK(s.p[0] == doctest::Approx(1.5).epsilon(1e-10));
  CHECK(s.p[1] == doctest::Approx(-2.0).epsilon(1e-10));
}

TEST_CASE("single Lorentzian exact recovery") {
  const auto x = linspace(-400, 400, 401);
  const Trace t = sample(x, [](double v) { return 0.1 + 3.0 * 43.8 * 43.8 / ((v - 12.5) * (v - 12.5) + 43.8 * 43.8); });
  const FitResult r = fit_lorentzian(t, 1);
  CHECK(r.converged);
  CHECK(rel(r.value("fwhm1"), 87.6) <= 1e-8);
  CHECK(rel(r.value("center1"), 12.5) <= 1e-8);
  CHECK(rel(r.value("amplitude1"), 3.0) <= 1e-8);
  CHECK(rel(r.value("offset"), 0.1) <= 1e-8);
  CHECK(r.errors.size() == 4);
}

TEST_CASE("two Lorentzians 980 MHz apart") {
  const auto x = linspace(-700, 700, 1401);
  const Trace t = sample(x, [](double v) {
    auto l = [](double u, double c, double w, double a) { return a * (w * w / 4) / ((u - c) * (u - c) + w * w / 4); };
    return 0.01 + l(v, -490, 60, 1.0) + l(v, 490, 55, 0.7);
  });
  const FitResult r = fit_lorentzian(t, 2);
  CHECK(std::abs(r.derived.at("separation") - 980.0) <= 0.1);
  CHECK(rel(r.value("center1"), -490) <= 1e-8);
  CHECK(rel(r.value("fwhm2"), 55) <= 1e-8);
}

TEST_CASE("flat trace is flagged degenerate") {
  const auto x = linspace(0, 1, 50);
  const FitResult r = fit_lorentzian(sample(x, [](double) { return 2.0; }), 1);
  CHECK(r.has_flag("degenerate"));
  CHECK(r.value("amplitude1") == 0.0);
  CHECK_THROWS_AS(fit_lorentzian(sample(linspace(0, 1, 10), [](double) { return 1.0; }), 1), FitError);
  CHECK_THROWS_AS(fit_lorentzian(sample(x, [](double) { return 1.0; }), 3), FitError);
}

TEST_CASE("g2 exact recovery") {
  const double g0 = 0.24;
  const double n = 1.0 / (1.0 - g0);
  const auto x = linspace(-500, 500, 1001);
  const Trace t = sample(x, [&](double v) { return g2_model(v, n, 0.9, 5.5, 103.7); });
  const FitResult r = fit_g2(t);
  CHECK(rel(r.value("g2_0"), 0.24) <= 1e-6);
  CHECK(rel(r.value("tau1"), 5.5) <= 1e-6);
  CHECK(rel(r.value("tau2"), 103.7) <= 1e-6);
  CHECK(rel(r.value("beta"), 0.9) <= 1e-6);
  CHECK(r.has_flag("single_emitter"));
  CHECK(single_emitter(0.24));
  CHECK_FALSE(single_emitter(0.6));
  // N = 1, beta = 1: full dip to zero.
  CHECK(g2_model(0.0, 1.0, 1.0, 5.5, 103.7) == 0.0);
}

TEST_CASE("g2 degenerate time constants are flagged") {
  const auto x = linspace(-300, 300, 601);
  const Trace t = sample(x, [&](double v) { return g2_model(v, 1.3, 0.6, 20.0, 20.0); });
  const FitResult r = fit_g2(t);
  CHECK(r.has_flag("tau_degenerate"));
}

TEST_CASE("visibility forward model matches the oracle") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0, 1);
  for (int k = 0; k < 200; ++k) {
    Populations p{u(rng), u(rng), u(rng), u(rng)};
    double s = p[0] + p[1] + p[2] + p[3];
    for (double& v : p) v /= s;
    const Visibilities v = visibilities_from_populations(p);
    const auto o = oracle::visibilities(p);
    CHECK(v.v_32_12 == doctest::Approx(o[0]).epsilon(1e-13));
    CHECK(v.v_12_m12 == doctest::Approx(o[1]).epsilon(1e-13));
    CHECK(v.v_m12_m32 == doctest::Approx(o[2]).epsilon(1e-13));
  }
  const Visibilities un = visibilities_from_populations({0.25, 0.25, 0.25, 0.25});
  CHECK(un.v_32_12 == 0.0);
  CHECK(un.v_12_m12 == 0.0);
  CHECK(un.v_m12_m32 == 0.0);
  const Visibilities ext = visibilities_from_populations({0, 1, 0, 0});
  CHECK(ext.v_12_m12 == 1.0);
  CHECK(ext.v_m12_m32 == 1.0);
  CHECK(ext.v_32_12 == 0.0);  // no signal in either arm
  CHECK_THROWS(visibilities_from_populations({0.5, 0.6, 0, 0}));
  CHECK_THROWS(visibilities_from_populations({-0.1, 0.6, 0.5, 0}));
}

TEST_CASE("population reconstruction round trip") {
  const Populations nominal{0.01, 0.975, 0.01, 0.005};
  const auto est = populations_from_visibilities(visibilities_from_populations(nominal));
  for (int i = 0; i < 4; ++i) CHECK(std::abs(est.p[static_cast<std::size_t>(i)] - nominal[static_cast<std::size_t>(i)]) <= 1e-12);

  const auto uni = populations_from_visibilities({0, 0, 0});
  for (double v : uni.p) CHECK(v == doctest::Approx(0.25).epsilon(1e-14));

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0, 1);
  double worst = 0;
  for (int k = 0; k < 1000; ++k) {
    // p(-3/2), p(+3/2) <= p(+1/2) <= p(-1/2)
    double m32 = u(rng), p32 = u(rng);
    double p12 = std::max(m32, p32) + u(rng);
    double m12 = p12 + u(rng);
    const double s = m32 + p32 + p12 + m12;
    const Populations p{m32 / s, m12 / s, p12 / s, p32 / s};
    const auto e = populations_from_visibilities(visibilities_from_populations(p));
    for (std::size_t i = 0; i < 4; ++i) worst = std::max(worst, std::abs(e.p[i] - p[i]));
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("population reconstruction conditioning and ordering") {
  // Approaching v = (1, 1, -1) the system becomes singular.
  double prev = 0;
  for (double eps : {1e-2, 1e-4, 1e-6}) {
    const auto e = solve_populations({1 - eps, 1 - eps, -1 + eps});
    CHECK(e.condition > prev);
    prev = e.condition;
  }
  CHECK_THROWS_AS(solve_populations({1, 1, -1}), PopulationError);
  try {
    populations_from_visibilities(visibilities_from_populations({0.1, 0.2, 0.6, 0.1}));
    FAIL("ordering violation not reported");
  } catch (const PopulationError& e) {
    CHECK_FALSE(e.estimate().ordering_ok);
    CHECK(e.estimate().p[2] == doctest::Approx(0.6).epsilon(1e-10));
  }
}

TEST_CASE("Rabi fit") {
  const auto x = linspace(0, 10, 201);
  const double f = 0.2575;
  const Trace t = sample(x, [&](double v) { return 0.5 - 0.4 * std::cos(2 * oracle::kPi * f * v); });
  const FitResult r = fit_rabi(t);
  CHECK(rel(r.value("frequency"), f) <= 1e-6);
  CHECK(rel(r.value("amplitude"), 0.4) <= 1e-6);
  CHECK(rel(r.value("offset"), 0.5) <= 1e-6);
  CHECK(rel(r.value("visibility"), 0.8) <= 1e-6);
  CHECK(std::abs(std::abs(r.value("phase")) - oracle::kPi) <= 1e-6);
  CHECK_THROWS_AS(fit_rabi(sample(x, [](double) { return 0.3; })), FitError);
  // Measured frequencies: ratio vs the ideal 2/sqrt(3).
  CHECK(std::abs(293.8 / 257.5 - 2 / std::sqrt(3.0)) < 0.015);
}

TEST_CASE("decay fits") {
  const auto te = linspace(0, 2000, 201);
  const Trace echo = sample(te, [](double v) { return 0.9 * std::exp(-std::pow(v / 850.0, 3)); });
  const FitResult r = fit_decay(echo, DecayKind::stretched_echo);
  CHECK(rel(r.value("T"), 850) <= 1e-6);
  CHECK(rel(r.value("n"), 3) <= 1e-6);
  CHECK(rel(r.value("amplitude"), 0.9) <= 1e-6);

  const auto tf = linspace(0, 90, 181);
  const Trace fid = sample(tf, [](double v) { return std::exp(-std::pow(v / 30.0, 2)); });
  CHECK(rel(fit_decay(fid, DecayKind::gaussian_fid).value("T"), 30) <= 1e-6);

  const auto tx = linspace(0, 50, 51);
  const Trace ex = sample(tx, [](double v) { return 2.0 * std::exp(-v / 12.0); });
  const FitResult rx = fit_decay(ex, DecayKind::exponential);
  std::vector<double> ly;
  for (double y : ex.y) ly.push_back(std::log(y));
  const auto [a, b] = oracle::linear_regression(ex.x, ly);
  CHECK(rx.value("T") == doctest::Approx(-1.0 / b).epsilon(1e-9));
  CHECK(rx.value("amplitude") == doctest::Approx(std::exp(a)).epsilon(1e-9));

  const Trace rising = sample(tx, [](double v) { return 1 + v; });
  CHECK_THROWS_AS(fit_decay(rising, DecayKind::exponential), FitError);
  CHECK(decay_kind_from_string("stretched_echo") == DecayKind::stretched_echo);
  CHECK_THROWS_AS(decay_kind_from_string("cubic"), ConfigError);
}

TEST_CASE("polarization fit") {
  std::vector<double> ang;
  for (int k = 0; k <= 36; ++k) ang.push_back(10.0 * k);
  auto curve = [&](double a, double phi0, double c) {
    std::vector<double> y;
    for (double p : ang) {
      const double cc = std::cos(2 * (p - phi0) * oracle::kPi / 180);
      y.push_back(a * cc * cc + c);
    }
    return y;
  };
  const auto y0 = curve(1.0, 23.0, 0.0);
  const FitResult r = fit_polarization(ang, y0);
  CHECK(r.value("contrast") == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(std::abs(r.value("phi0") - 23.0) <= 0.1);

  const auto y1 = curve(2.0, 71.3, 0.3);
  const FitResult r1 = fit_polarization(ang, y1);
  CHECK(rel(r1.value("phi0"), 71.3) <= 1e-6);
  CHECK(rel(r1.value("A"), 2.0) <= 1e-6);
  CHECK(rel(r1.value("C"), 0.3) <= 1e-6);
  CHECK(rel(r1.value("contrast"), 2.0 / 2.6) <= 1e-6);

  // Two parallel dipoles give the same axis.
  const FitResult a1 = fit_polarization(ang, curve(1.0, 40.0, 0.1));
  const FitResult a2 = fit_polarization(ang, curve(0.5, 40.0, 0.2));
  CHECK(std::abs(a1.value("phi0") - a2.value("phi0")) <= 1e-6);

  const std::vector<double> narrow{0, 30, 60, 90, 120};
  CHECK_THROWS_AS(fit_polarization(narrow, std::vector<double>(5, 1.0)), FitError);
  const std::vector<double> alias{0, 90, 180, 270, 0, 90, 180};
  CHECK_THROWS_AS(fit_polarization(alias, std::vector<double>(7, 1.0)), FitError);
}

TEST_CASE("fits are deterministic") {
  const auto x = linspace(0, 10, 101);
  const Trace t = sample(x, [](double v) { return 0.5 + 0.3 * std::cos(1.7 * v + 0.2) + 0.01 * std::sin(37 * v); });
  const FitResult a = fit_rabi(t);
  const FitResult b = fit_rabi(t);
  CHECK(a.values == b.values);
  CHECK(a.rss == b.rss);
}
