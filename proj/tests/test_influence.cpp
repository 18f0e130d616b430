#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "tiered/errors.hpp"
#include "tiered/influence.hpp"
#include "tiered/linalg.hpp"

using namespace tiered;

namespace {

double max_dev(const InfluenceMatrix& a, const InfluenceMatrix& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, max_abs(a.theta[k] - b.theta[k]));
  return m;
}

}  // namespace

TEST_CASE("uncoupled evolution is the closed-system rotation") {
  const SystemModel model = SystemModel::two_level(0.4, 1.1);
  const TimeGrid grid{0.05, 200};
  const KernelSamples k = kernel(discrete({{1.0, 0.0, 0.0}}), ThermalParams::from_kT(1.0), grid);
  const InfluenceMatrix theta = theta_quadrature(model, k, grid);
  CHECK(max_abs(theta.theta.back()) == 0.0);
  const PVector rho0 = two_level_state(0.0, 0.0, 1.0);
  const ReducedTrajectory traj = evolve(model, theta, rho0);
  CMatrix h(2, 2);
  h << 0.2, 0.55, 0.55, -0.2;
  const CMatrix r0 = devectorize(rho0, *model.basis);
  for (std::size_t i = 0; i < grid.size(); i += 20) {
    const CMatrix u = unitary_exp(h, grid.time(i));
    const CMatrix r = u * r0 * u.adjoint();
    CHECK(std::abs(traj.expectation(i, 2) - (r(0, 0) - r(1, 1)).real()) < 1e-12);
    CHECK(std::abs(traj.expectation(i, 0) - 2.0 * r(1, 0).real()) < 1e-12);
  }
}

TEST_CASE("piecewise propagator and interaction frames") {
  RVector h1(3), h2(3);
  h1 << 0.3, 0.0, 0.5;
  h2 << -0.2, 0.4, 0.1;
  RVector v(4);
  v << 0.0, 0.0, 1.0, 0.0;
  const SystemModel m = SystemModel::make(2, {{0.0, h1}, {0.73, h2}}, v);
  const SuBasis& b = *m.basis;
  auto hx = [&](const RVector& h) { return build_hcross(std::span<const double>(h.data(), 3), b).matrix; };
  const CMatrix expected = expm(CMatrix(-I * hx(h2) * 0.47)) * expm(CMatrix(-I * hx(h1) * 0.73));
  CHECK(max_abs(propagator(m, 1.2) - expected) < 1e-12);
  const TimeGrid grid{0.1, 20};
  const InteractionFrames frames(m, grid);
  for (std::size_t k = 0; k < grid.size(); k += 3) CHECK(max_abs(frames.U(k) - propagator(m, grid.time(k))) < 1e-12);
  CHECK_THROWS_AS(SystemModel::make(2, {{0.5, h1}}, v), ValidationError);
  CHECK_THROWS_AS(SystemModel::make(2, {{0.0, h1}, {0.0, h2}}, v), ValidationError);
}

TEST_CASE("single-mode relaxation exponent matches the analytic integral") {
  const double Delta = 1.2, w = 0.9, g = 0.05;
  const ThermalParams th = ThermalParams::from_kT(0.8);
  const SystemModel model = SystemModel::two_level(0.0, Delta);
  const TimeGrid grid{0.002, 10000};
  const KernelSamples k = kernel(discrete({{w, g, 0.0}}), th, grid);
  const SpinBosonTheta sb = theta_spinboson(model, k, grid);
  const double c = g * g * thermal_coth(w, th);
  for (std::size_t i = 0; i < grid.size(); i += 1000) {
    const double t = grid.time(i);
    const double exact = -c * ((1.0 - std::cos((w - Delta) * t)) / std::pow(w - Delta, 2) +
                               (1.0 - std::cos((w + Delta) * t)) / std::pow(w + Delta, 2));
    CHECK(std::abs(sb.relax_exponent(static_cast<Eigen::Index>(i)) - exact) < 1e-7);
  }
}

TEST_CASE("closed form agrees with quadrature") {
  // both paths are second order in dt, so their difference must shrink fourfold per halving
  const SystemModel model = SystemModel::two_level(0.0, std::numbers::pi / 2);
  const ThermalParams th = ThermalParams::from_kT(6.546);
  auto gap = [&](double dt) {
    const TimeGrid grid = TimeGrid::covering(3.0, dt);
    const KernelSamples k = kernel(ohmic(0.00675, 3.0, 2.2), th, grid);
    return max_dev(theta_quadrature(model, k, grid), theta_spinboson(model, k, grid).sum());
  };
  const double coarse = gap(0.01), fine = gap(0.005);
  CHECK(coarse / fine == doctest::Approx(4.0).epsilon(0.02));
  CHECK(gap(0.0025) < 5e-6);

  const TimeGrid grid{0.01, 300};
  const KernelSamples k = kernel(ohmic(0.00675, 3.0, 2.2), th, grid);
  const SystemModel biased = SystemModel::two_level(0.3, 1.0);
  CHECK_THROWS_AS(theta_spinboson(biased, k, grid), UnsupportedError);
}

TEST_CASE("configuration errors") {
  const SystemModel model = SystemModel::two_level(0.2, 1.0);
  const ThermalParams th = ThermalParams::from_kT(1.0);
  const SpectralDensity bath = discrete({{1.0, 0.1, 0.0}});
  const TimeGrid grid{0.05, 100};
  CHECK_THROWS_AS(theta_quadrature(model, kernel(bath, th, TimeGrid{0.1, 100}), grid), ConfigurationError);
  CHECK_THROWS_AS(theta_quadrature(model, kernel(bath, th, TimeGrid{0.05, 40}), grid), ConfigurationError);
  // a kernel that has decayed before its grid ends is long enough
  const SpectralDensity damped = discrete({{1.0, 0.1, 2.0}});
  CHECK_NOTHROW(theta_quadrature(model, kernel(damped, th, TimeGrid{0.05, 400}), TimeGrid{0.05, 1000}));
}

TEST_CASE("memory cut follows the kernel decay") {
  const SystemModel model = SystemModel::two_level(0.2, 1.0);
  const ThermalParams th = ThermalParams::from_kT(1.0);
  const TimeGrid grid{0.05, 2000};
  const KernelSamples k = kernel(discrete({{1.0, 0.1, 1.0}}), th, grid);
  ThetaOptions opts;
  const std::optional<double> tb = effective_memory_time(k, opts);
  REQUIRE(tb.has_value());
  CHECK(*tb < grid.t_max());
  ThetaOptions full;
  full.truncate = false;
  CHECK_FALSE(effective_memory_time(k, full).has_value());
  const InfluenceMatrix exact = theta_quadrature(model, k, grid, full);
  CHECK(max_dev(theta_quadrature(model, k, grid, opts), exact) < 1e-5 * max_abs(exact.theta.back()));
}

TEST_CASE("trace row, trace component and hermiticity") {
  // three-level system with a two-segment schedule and a damped mode
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  RVector h1(8), h2(8), v(9);
  for (int i = 0; i < 8; ++i) {
    h1(i) = u(rng);
    h2(i) = u(rng);
  }
  for (int i = 0; i < 9; ++i) v(i) = u(rng);
  const SystemModel m = SystemModel::make(3, {{0.0, h1}, {2.0, h2}}, v);
  const TimeGrid grid{0.02, 300};
  const KernelSamples k = kernel(discrete({{0.7, 0.1, 0.05}, {1.9, 0.05, 0.0}}), ThermalParams::from_kT(1.0), grid);
  const InfluenceMatrix theta = theta_quadrature(m, k, grid);
  for (const CMatrix& t : theta.theta) CHECK(t.row(8).cwiseAbs().maxCoeff() == 0.0);
  CMatrix rho = CMatrix::Zero(3, 3);
  rho(0, 0) = 0.7;
  rho(1, 1) = 0.3;
  const PVector p0 = vectorize(rho, *m.basis);
  const ReducedTrajectory traj = evolve(m, theta, p0);
  for (const PVector& p : traj.states) {
    CHECK(p.trace_component() == p0.trace_component());
    const CMatrix r = devectorize(p, *m.basis);
    CHECK(max_abs(r - r.adjoint()) < 1e-10);
  }
  CHECK(traj.max_imag < 1e-10);
}

TEST_CASE("influence matrices add over disjoint mode sets") {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> w(0.3, 2.0), g(0.01, 0.1), gam(0.0, 0.1);
  const SystemModel model = SystemModel::two_level(0.5, 1.0);
  const ThermalParams th = ThermalParams::from_kT(1.5);
  const TimeGrid grid{0.05, 100};
  ThetaOptions full;
  full.truncate = false;
  std::vector<DampedMode> a, b;
  for (int i = 0; i < 3; ++i) a.push_back({w(rng), g(rng), gam(rng)});
  for (int i = 0; i < 2; ++i) b.push_back({w(rng), g(rng), gam(rng)});
  std::vector<DampedMode> ab = a;
  ab.insert(ab.end(), b.begin(), b.end());
  InfluenceMatrix sum = theta_quadrature(model, kernel(discrete(a), th, grid), grid, full);
  sum += theta_quadrature(model, kernel(discrete(b), th, grid), grid, full);
  const InfluenceMatrix joint = theta_quadrature(model, kernel(discrete(ab), th, grid), grid, full);
  CHECK(max_dev(sum, joint) < 1e-12);
}

TEST_CASE("reorganization times need a decaying kernel") {
  const ThermalParams th = ThermalParams::from_kT(1.0);
  const TimeGrid grid{0.05, 400};
  CHECK_THROWS_AS(reorg_times(kernel(discrete({{1.0, 0.1, 0.0}}), th, grid), 1.0), DegenerateKernelError);
  const KernelSamples k = kernel(discrete({{1.0, 0.1, 1.0}}), th, TimeGrid{0.01, 6000});
  const ReorganizationTimes r = reorg_times(k, 1.0);
  CHECK(std::isfinite(r.relax));
  CHECK(std::isfinite(r.thermal));
  const PVector p = steady_state_spinboson(k, 1.0);
  CHECK(p.trace_component() == 0.5);
  CHECK(p.expectation(0) < 0.0);
  CHECK(p.expectation(0) > -1.0);
}

TEST_CASE("matrix exponential agrees with the eigendecomposition path") {
  std::mt19937 rng(11);
  std::normal_distribution<double> n(0.0, 0.7);
  for (int dim : {2, 4, 9}) {
    CMatrix a(dim, dim);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) a(i, j) = cplx(n(rng), n(rng));
    CHECK(max_abs(expm(a) - expm_eig(a)) < 1e-10 * std::max(1.0, max_abs(expm(a))));
  }
  CHECK(max_abs(expm(CMatrix::Zero(3, 3)) - CMatrix::Identity(3, 3)) < 1e-15);
}
