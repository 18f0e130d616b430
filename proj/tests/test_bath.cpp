#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>
#include <string>

#include "tiered/bath.hpp"
#include "tiered/errors.hpp"
#include "tiered/quadrature.hpp"

using namespace tiered;

TEST_CASE("thermal factors") {
  const ThermalParams th = ThermalParams::from_kT(2.0);
  CHECK(th.beta == doctest::Approx(0.5));
  const double n = thermal_occupation(1.0, th);
  CHECK(n == doctest::Approx(1.0 / (std::exp(0.5) - 1.0)));
  CHECK(thermal_coth(1.0, th) == doctest::Approx(2.0 * n + 1.0));
  CHECK(thermal_coth(1000.0, th) == 1.0);
  CHECK_THROWS_AS(ThermalParams::from_kT(0.0), ValidationError);
  CHECK_THROWS_AS(ThermalParams::from_beta(-1.0), ValidationError);
  CHECK_THROWS_AS(thermal_occupation(0.0, th), ValidationError);
}

TEST_CASE("quadrature helpers") {
  const QuadratureRule r = gauss_legendre(6, -1.0, 2.0);
  double s = 0.0;
  for (std::size_t i = 0; i < r.nodes.size(); ++i) s += r.weights[i] * std::pow(r.nodes[i], 11);
  CHECK(s == doctest::Approx((std::pow(2.0, 12) - 1.0) / 12.0).epsilon(1e-13));

  const QuadratureRule t = trapezoid_weights({0.0, 1.0, 3.0});
  CHECK(t.weights[0] == doctest::Approx(0.5));
  CHECK(t.weights[1] == doctest::Approx(1.5));
  CHECK(t.weights[2] == doctest::Approx(1.0));

  RVector y(4);
  y << 0.0, 1.0, 2.0, 3.0;
  const RVector c = cumulative_trapezoid(y, 0.5);
  CHECK(c(0) == 0.0);
  CHECK(c(3) == doctest::Approx(0.5 * 4.5));
}

TEST_CASE("continuous kernel matches adaptive quadrature") {
  // super-ohmic density with gaussian cutoff
  const SpectralDensity spec = ohmic(0.00675, 3.0, 2.2);
  const ThermalParams th = ThermalParams::from_kT(6.546);
  const TimeGrid grid{0.25, 24};
  const KernelSamples k = kernel(spec, th, grid);
  CHECK_FALSE(k.damped);
  const OhmicFamily& o = std::get<OhmicFamily>(spec.kind);
  for (std::size_t i = 0; i < grid.size(); i += 4) {
    const double tau = grid.time(i);
    auto re = [&](double w) { return w <= 0.0 ? 0.0 : o.J(w) * thermal_coth(w, th) * std::cos(w * tau); };
    auto im = [&](double w) { return -o.J(w) * std::sin(w * tau); };
    const double d = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(re, 0.0, 11.0, 15, 1e-14);
    const double d1 = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(im, 0.0, 11.0, 15, 1e-14);
    const double scale = std::abs(k.alpha(0));
    CHECK(std::abs(k.D(i) - d) < 1e-10 * scale);
    CHECK(std::abs(k.D1(i) - d1) < 1e-10 * scale);
  }
}

TEST_CASE("exponential cutoff uses the wider default limit") {
  const SpectralDensity spec = ohmic(0.1, 1.0, 1.0, CutoffForm::Exponential);
  const Discretization d = frequency_quadrature(spec);
  CHECK(d.omega.back() > 35.0);
  CHECK(d.omega.back() < 40.0);
  double total = 0.0;
  for (double w : d.weight) total += w;
  // int_0^inf 0.1 w e^{-w} dw = 0.1
  CHECK(total == doctest::Approx(0.1).epsilon(1e-12));

  SpectralDensity tight = spec;
  tight.quadrature.omega_max = 5.0;
  CHECK_THROWS_AS(frequency_quadrature(tight), ConfigurationError);
}

TEST_CASE("damped mode kernel is the analytic damped cosine") {
  const DampedMode m{1.3, 0.2, 0.1};
  const ThermalParams th = ThermalParams::from_kT(0.7);
  const TimeGrid grid{0.1, 100};
  const KernelSamples k = kernel(discrete({m}), th, grid);
  CHECK(k.damped);
  for (std::size_t i = 0; i < grid.size(); i += 10) {
    const double tau = grid.time(i);
    const double env = std::exp(-0.05 * tau);
    CHECK(k.D(i) == doctest::Approx(0.04 * thermal_coth(1.3, th) * env * std::cos(1.3 * tau)));
    CHECK(k.D1(i) == doctest::Approx(-0.04 * env * std::sin(1.3 * tau)));
    const cplx a = kernel_at(frequency_quadrature(discrete({m})), th, tau);
    CHECK(std::abs(a - k.alpha(i)) < 1e-15);
  }
}

TEST_CASE("memory time and truncation") {
  const DampedMode m{1.0, 0.1, 0.5};
  const ThermalParams th = ThermalParams::from_kT(1.0);
  const TimeGrid grid{0.05, 1400};
  const KernelSamples k = kernel(discrete({m}), th, grid);
  const std::optional<double> tb = memory_time(k, 1e-6);
  REQUIRE(tb.has_value());
  // the envelope e^{-gamma tau / 2} crosses 1e-6 near 55.3
  CHECK(*tb > 50.0);
  CHECK(*tb < 2.0 * std::log(1e6 * thermal_coth(1.0, th)) / 0.5 + 0.1);
  for (std::size_t i = 0; i < k.size(); ++i) {
    if (grid.time(i) >= *tb) CHECK(std::abs(k.alpha(i)) < 1e-6 * std::abs(k.alpha(0)));
  }
  const KernelSamples t = truncated(k, 10.0);
  CHECK(t.D(200) == k.D(200));
  CHECK(t.D(201) == 0.0);
  CHECK(t.D1(400) == 0.0);

  const KernelSamples undamped = kernel(discrete({{1.0, 0.1, 0.0}}), th, grid);
  CHECK_FALSE(memory_time(undamped).has_value());
}

TEST_CASE("kernels add over disjoint parts") {
  const ThermalParams th = ThermalParams::from_kT(2.0);
  const TimeGrid grid{0.1, 50};
  const SpectralDensity a = discrete({{1.0, 0.1, 0.02}});
  const SpectralDensity b = ohmic(0.01, 1.0, 3.0);
  const std::vector<SpectralDensity> both{a, b};
  const KernelSamples sum = kernel(a, th, grid) + kernel(b, th, grid);
  const KernelSamples joint = kernel(both, th, grid);
  CHECK((sum.D - joint.D).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((sum.D1 - joint.D1).cwiseAbs().maxCoeff() < 1e-15);
  CHECK_THROWS_AS(kernel(a, th, grid) + kernel(a, th, TimeGrid{0.1, 10}), ConfigurationError);
}

TEST_CASE("validation") {
  CHECK_THROWS_AS(validate(discrete({{1.0, -0.1, 0.0}})), ValidationError);
  CHECK_THROWS_AS(validate(discrete({{0.0, 0.1, 0.0}})), ValidationError);
  CHECK_THROWS_AS(validate(ohmic(-1.0, 1.0, 1.0)), ValidationError);
  SpectralDensity tab{Tabulated{{0.0, 1.0, 2.0}, {0.5, 1.0, 0.0}, {}}, {}};
  CHECK_THROWS_AS(frequency_quadrature(tab), ValidationError);
  std::get<Tabulated>(tab.kind).J[0] = 0.0;
  CHECK(frequency_quadrature(tab).size() == 2);

  std::vector<std::string> seen;
  const WarningHandler old = set_warning_handler([&](std::string_view m) { seen.emplace_back(m); });
  validate(discrete({{0.2, 0.03, 0.8}}));
  set_warning_handler(old);
  REQUIRE(seen.size() == 1);
  CHECK(seen[0].find("0.2 omega") != std::string::npos);
}

TEST_CASE("damping profiles interpolate and clamp") {
  const GammaProfile p{0.0, {1.0, 2.0}, {0.1, 0.3}};
  CHECK(p(0.5) == doctest::Approx(0.1));
  CHECK(p(1.5) == doctest::Approx(0.2));
  CHECK(p(3.0) == doctest::Approx(0.3));
  CHECK_FALSE(p.is_zero());
  const SpectralDensity s = ohmic(0.01, 1.0, 1.0, CutoffForm::Gaussian, p);
  CHECK(s.gamma_at(1.5) == doctest::Approx(0.2));
}
