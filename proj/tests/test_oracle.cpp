#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "tiered/errors.hpp"
#include "tiered/linalg.hpp"
#include "tiered/oracle.hpp"
#include "tiered/rates.hpp"

using namespace tiered;

namespace {

CMatrix up() {
  CMatrix r = CMatrix::Zero(2, 2);
  r(0, 0) = 1.0;
  return r;
}

double max_rho_dev(const OracleTrajectory& a, const OracleTrajectory& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.rho.size(); ++k) m = std::max(m, max_abs(a.rho[k] - b.rho[k]));
  return m;
}

}  // namespace

TEST_CASE("rational approximant of the exponential") {
  const RationalExpansion r = pade34_expansion();
  CHECK(r.poles.size() == 4);
  CHECK(std::abs(r(0.0) - 1.0) < 1e-14);
  for (double x : {-0.05, -0.2, 0.1}) CHECK(std::abs(r(x) - std::exp(x)) < 1e-9 * std::pow(std::abs(x) / 0.05, 8));
  // bounded on the imaginary axis and decaying far into the left half plane
  for (double y : {0.5, 2.0, 10.0, 100.0}) CHECK(std::abs(r(cplx(0.0, y))) <= 1.0 + 1e-12);
  CHECK(std::abs(r(-1e6)) < 1e-5);
  for (const cplx& p : r.poles) CHECK(p.real() > 0.0);
}

TEST_CASE("thermal tails pick the truncation") {
  const ThermalParams th = ThermalParams::from_kT(1.0);
  const DampedMode m{0.2, 0.03, 0.8};
  const int n = fock_truncation(m, th, 1e-8);
  const double occ = thermal_occupation(0.2, th);
  CHECK(thermal_tail(occ, n) < 1e-8);
  CHECK(thermal_tail(occ, n - 1) >= 1e-8);
  CHECK(fock_truncation({50.0, 0.1, 0.1}, th, 1e-8) == 2);
}

TEST_CASE("uncoupled thermal mode is stationary") {
  const SystemModel model = SystemModel::two_level(1.0, 0.0);
  FockConfig cfg;
  cfg.modes = {{0.7, 0.0, 0.2}};
  const FockLindblad o(model, cfg, ThermalParams::from_kT(1.0));
  const CVector v = o.thermal_product_state(up());
  CHECK(std::abs(o.trace(v) - 1.0) < 1e-14);
  CHECK((o.liouvillian() * v).norm() < 1e-13);
  CHECK(max_abs(o.system_state(v) - up()) < 1e-14);
}

TEST_CASE("trace and hermiticity along a coupled run") {
  const SystemModel model = SystemModel::two_level(0.5, 1.0);
  FockConfig cfg;
  cfg.modes = {{0.9, 0.1, 0.2}};
  const ThermalParams th = ThermalParams::from_kT(0.8);
  const OracleTrajectory t = lindblad_evolve(model, cfg, th, up(), TimeGrid{0.5, 40});
  CHECK(t.rho.size() == 41);
  CHECK(t.max_trace_error < 1e-9);
  CHECK(t.max_hermiticity_error < 1e-9);
  CHECK(max_abs(t.rho[0] - up()) < 1e-14);
  for (const CMatrix& r : t.rho) {
    const Eigen::SelfAdjointEigenSolver<CMatrix> es(r);
    CHECK(es.eigenvalues().minCoeff() > -1e-9);
  }
}

TEST_CASE("rational and adaptive integrators agree") {
  const SystemModel model = SystemModel::two_level(0.3, 1.0);
  const ThermalParams th = ThermalParams::from_kT(1.0);
  const TimeGrid grid{0.5, 40};
  for (const std::vector<DampedMode>& modes : {std::vector<DampedMode>{{0.9, 0.08, 0.15}},
                                               std::vector<DampedMode>{{1.1, 0.08, 0.1}, {1.6, 0.05, 0.3}}}) {
    FockConfig cfg;
    cfg.modes = modes;
    if (modes.size() > 1) cfg.n_fock = {4, 3};
    const OracleTrajectory a = lindblad_evolve(model, cfg, th, up(), grid);
    cfg.integrator = OracleIntegrator::Rational;
    cfg.max_step = 0.05;
    const OracleTrajectory r = lindblad_evolve(model, cfg, th, up(), grid);
    CHECK(a.levels == r.levels);
    CHECK(max_rho_dev(a, r) < 1e-7);
  }
}

TEST_CASE("piecewise schedules switch Liouvillians") {
  RVector h1(3), h2(3), v(4);
  h1 << 1.0, 0.0, 0.0;
  h2 << 0.0, 0.0, 1.0;
  v << 0.0, 0.0, 1.0, 0.0;
  const SystemModel model = SystemModel::make(2, {{0.0, h1}, {1.3, h2}}, v);
  FockConfig cfg;
  cfg.modes = {{1.0, 0.0, 0.1}};
  // no coupling: the system rotates about x, then about z
  const OracleTrajectory t = lindblad_evolve(model, cfg, ThermalParams::from_kT(1.0), up(), TimeGrid{0.1, 30});
  const CMatrix u = propagator(model, 3.0);
  const CVector p = u * vectorize(up(), *model.basis).coeffs.cast<cplx>();
  PVector expected{p.real()};
  CHECK(max_abs(t.rho.back() - devectorize(expected, *model.basis)) < 1e-7);
}

TEST_CASE("steady state at weak coupling matches the rate formula") {
  const DampedMode mode{0.8, 0.01, 0.2};
  const ThermalParams th = ThermalParams::from_kT(0.9);
  const SystemModel model = SystemModel::two_level(0.0, 1.0);
  FockConfig cfg;
  cfg.modes = {mode};
  const CMatrix r = lindblad_steady_state(model, cfg, th);
  const double sx = 2.0 * r(1, 0).real();
  const RateReport rates = rabi_rates(0.0, 1.0, mode, th);
  CHECK(std::abs(sx - rates.steady_sigma_z_tilde) < 1e-3);
}

TEST_CASE("the truncation converges") {
  const SystemModel model = SystemModel::two_level(0.5, 1.0);
  const ThermalParams th = ThermalParams::from_kT(1.0);
  FockConfig cfg;
  cfg.modes = {{0.6, 0.1, 0.2}};
  const OracleTrajectory a = lindblad_evolve(model, cfg, th, up(), TimeGrid{1.0, 20});
  cfg.n_fock = {a.levels[0] + 10};
  const OracleTrajectory b = lindblad_evolve(model, cfg, th, up(), TimeGrid{1.0, 20});
  CHECK(max_rho_dev(a, b) < 1e-6);

  cfg.modes = {{0.1, 0.1, 0.2}, {0.1, 0.1, 0.2}};
  cfg.n_fock = {60, 60};
  CHECK_THROWS_AS(FockLindblad(model, cfg, th), ConfigurationError);
  cfg.n_fock = {1, 4};
  CHECK_THROWS_AS(FockLindblad(model, cfg, th), ValidationError);
}

TEST_CASE("second-order generator integral equals the quadrature influence matrix") {
  const SystemModel model = SystemModel::two_level(0.4, 1.0);
  const TimeGrid grid{0.02, 150};
  const KernelSamples k = kernel(discrete({{0.9, 0.1, 0.0}, {1.7, 0.05, 0.0}}), ThermalParams::from_kT(1.0), grid);
  ThetaOptions full;
  full.truncate = false;
  const InfluenceMatrix q = theta_quadrature(model, k, grid, full);
  const InfluenceMatrix t = tcl2_theta(model, k, grid);
  double m = 0.0, s = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    m = std::max(m, max_abs(q.theta[i] - t.theta[i]));
    s = std::max(s, max_abs(q.theta[i]));
  }
  CHECK(m < 1e-12 * std::max(1.0, s));

  const TimeGrid coarse{0.04, 75};
  const PVector rho0 = two_level_state(0.0, 0.0, 1.0);
  const ReducedTrajectory tcl = tcl2_reference(model, k, coarse, rho0);
  CHECK(tcl.states.size() == coarse.size());
  CHECK_THROWS_AS(tcl2_reference(model, k, TimeGrid{0.05, 10}, rho0), ConfigurationError);
}
