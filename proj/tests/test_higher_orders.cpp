#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "tiered/errors.hpp"
#include "tiered/higher_orders.hpp"
#include "tiered/linalg.hpp"

using namespace tiered;

namespace {

const std::vector<DampedMode> kModes{{1.0, 0.08, 0.1}, {0.6, 0.05, 0.0}};

CMatrix scalar(cplx x) { return CMatrix::Constant(1, 1, x); }

}  // namespace

TEST_CASE("odd orders vanish without parity pruning") {
  const SystemModel model = SystemModel::two_level(0.4, 1.0);
  const TimeGrid grid{0.05, 60};
  MomentOptions opts;
  opts.prune_parity = false;
  const ThermalParams th = ThermalParams::from_kT(1.0);
  const MomentIndex zero = MomentIndex::zero(kModes.size());
  for (int n : {1, 3}) {
    const std::vector<CMatrix> c = chi(n, zero, kModes, model, th, grid, opts);
    double m = 0.0;
    for (const CMatrix& x : c) m = std::max(m, max_abs(x));
    CHECK(m <= 1e-14);
  }
}

TEST_CASE("second moment equals the quadrature influence matrix") {
  const SystemModel model = SystemModel::two_level(0.4, 1.0);
  const TimeGrid grid{0.02, 200};
  const ThermalParams th = ThermalParams::from_kT(1.0);
  const std::vector<CMatrix> c2 = chi(2, MomentIndex::zero(kModes.size()), kModes, model, th, grid);
  ThetaOptions full;
  full.truncate = false;
  const InfluenceMatrix q = theta_quadrature(model, kernel(discrete(kModes), th, grid), grid, full);
  double m = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) m = std::max(m, max_abs(c2[k] - q.theta[k]));
  CHECK(m < 1e-6);

  const ThetaSeries s = theta_series(kModes, model, th, grid, 2);
  double d = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) d = std::max(d, max_abs(s.total(2).theta[k] - q.theta[k]));
  CHECK(d < 1e-6);
}

TEST_CASE("order limits and index validation") {
  const SystemModel model = SystemModel::two_level(0.0, 1.0);
  const TimeGrid grid{0.05, 10};
  const ThermalParams th = ThermalParams::from_kT(1.0);
  MomentSolver solver(model, kModes, th, grid);
  CHECK_THROWS_AS(solver.chi(6, MomentIndex::zero(2)), CapabilityError);
  CHECK_THROWS_AS(solver.chi(-1, MomentIndex::zero(2)), ValidationError);
  CHECK_THROWS_AS(solver.chi(2, MomentIndex::zero(1)), ValidationError);
  CHECK_THROWS_AS(theta_series(kModes, model, th, grid, 3), ValidationError);
  CHECK_THROWS_AS(theta_series(kModes, model, th, grid, 6), CapabilityError);
  CHECK_THROWS_AS(MomentSolver(model, {}, th, grid), ValidationError);
}

TEST_CASE("memoization reuses shared sub-moments") {
  const SystemModel model = SystemModel::two_level(0.2, 1.0);
  const TimeGrid grid{0.05, 20};
  const ThermalParams th = ThermalParams::from_kT(1.0);
  MomentSolver cached(model, kModes, th, grid);
  const std::vector<CMatrix> a = cached.chi(4, MomentIndex::zero(2));
  const std::size_t first = cached.evaluations();
  CHECK(cached.cache_size() > 0);
  cached.chi(4, MomentIndex::zero(2));
  CHECK(cached.evaluations() == first);

  MomentOptions off;
  off.use_cache = false;
  MomentSolver plain(model, kModes, th, grid, off);
  const std::vector<CMatrix> b = plain.chi(4, MomentIndex::zero(2));
  CHECK(plain.evaluations() > first);
  for (std::size_t k = 0; k < grid.size(); ++k) CHECK(max_abs(a[k] - b[k]) < 1e-14);
}

TEST_CASE("cumulant assembly inverts the exponential series") {
  // commuting case: sum_m chi_m = exp(sum_m theta_m) order by order
  const cplx c1(0.3, 0.1), c2(-0.2, 0.05), c3(0.07, 0.0), c4(0.01, -0.02);
  std::vector<CMatrix> chis{scalar(1.0), scalar(c1), scalar(c2 + c1 * c1 / 2.0),
                            scalar(c3 + c1 * c2 + c1 * c1 * c1 / 6.0),
                            scalar(c4 + c1 * c3 + c2 * c2 / 2.0 + c1 * c1 * c2 / 2.0 + std::pow(c1, 4) / 24.0)};
  const std::vector<CMatrix> th = assemble_cumulants(chis);
  CHECK(std::abs(th[1](0, 0) - c1) < 1e-15);
  CHECK(std::abs(th[2](0, 0) - c2) < 1e-15);
  CHECK(std::abs(th[3](0, 0) - c3) < 1e-15);
  CHECK(std::abs(th[4](0, 0) - c4) < 1e-15);

  // with chi_1 = chi_3 = 0: Theta_4 = chi_4 - Theta_2^2 / 2
  CMatrix a(2, 2), b(2, 2);
  a << 0.1, 0.2, -0.3, 0.05;
  b << 0.02, -0.01, 0.04, 0.03;
  const CMatrix z = CMatrix::Zero(2, 2);
  const std::vector<CMatrix> t2 = assemble_cumulants({CMatrix::Identity(2, 2), z, a, z, b});
  CHECK(max_abs(t2[2] - a) == 0.0);
  CHECK(max_abs(t2[4] - (b - 0.5 * a * a)) < 1e-16);
}

TEST_CASE("fourth-order series keeps the trace row empty and is small") {
  const SystemModel model = SystemModel::two_level(0.0, 1.0);
  const TimeGrid grid{0.05, 40};
  const ThetaSeries s = theta_series(kModes, model, ThermalParams::from_kT(1.0), grid, 4);
  REQUIRE(s.theta.size() == 5);
  double n2 = 0.0, n4 = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    CHECK(s.theta[4][k].row(3).cwiseAbs().maxCoeff() == 0.0);
    CHECK(max_abs(s.theta[3][k]) == 0.0);
    n2 = std::max(n2, max_abs(s.theta[2][k]));
    n4 = std::max(n4, max_abs(s.theta[4][k]));
  }
  CHECK(n4 > 0.0);
  CHECK(n4 < n2);
}
