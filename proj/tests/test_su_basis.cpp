#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "tiered/errors.hpp"
#include "tiered/su_basis.hpp"

using namespace tiered;

namespace {

CMatrix random_hermitian(int n, std::mt19937& rng) {
  std::normal_distribution<double> g;
  CMatrix a(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) a(i, j) = cplx(g(rng), g(rng));
  }
  return 0.5 * (a + a.adjoint());
}

CMatrix random_density(int n, std::mt19937& rng) {
  const CMatrix a = random_hermitian(n, rng);
  CMatrix rho = a * a.adjoint();
  return rho / rho.trace();
}

double max_abs(const CMatrix& a) { return a.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("two-level basis is the Pauli set") {
  const SuBasis b(2);
  CMatrix sx(2, 2), sy(2, 2), sz(2, 2);
  sx << 0, 1, 1, 0;
  sy << 0, -I, I, 0;
  sz << 1, 0, 0, -1;
  CHECK(max_abs(b.nu(0) - sx) == 0.0);
  CHECK(max_abs(b.nu(1) - sy) == 0.0);
  CHECK(max_abs(b.nu(2) - sz) == 0.0);
  CHECK(b.f(0, 1, 2) == doctest::Approx(1.0));
  CHECK(b.f(1, 0, 2) == doctest::Approx(-1.0));
  CHECK(b.d(0, 0, 2) == 0.0);
}

TEST_CASE("three-level basis follows the documented order") {
  const SuBasis b(3);
  CHECK(b.size() == 8);
  // lambda_1, lambda_4, lambda_6 first, then lambda_2, lambda_5, lambda_7, then lambda_3, lambda_8
  CHECK(b.nu(1)(0, 2) == cplx(1.0));
  CHECK(b.nu(2)(1, 2) == cplx(1.0));
  CHECK(b.nu(3)(0, 1) == -I);
  CHECK(b.nu(5)(2, 1) == I);
  CHECK(b.nu(6)(1, 1) == cplx(-1.0));
  CHECK(b.nu(7)(2, 2).real() == doctest::Approx(-2.0 / std::sqrt(3.0)));
  // f_147 = 1/2, f_123 = 1, d_118 = 1/sqrt3, d_448 = -1/(2 sqrt3)
  CHECK(b.f(0, 1, 5) == doctest::Approx(0.5));
  CHECK(b.f(0, 3, 6) == doctest::Approx(1.0));
  CHECK(b.d(0, 0, 7) == doctest::Approx(1.0 / std::sqrt(3.0)));
  CHECK(b.d(1, 1, 7) == doctest::Approx(-0.5 / std::sqrt(3.0)));
}

TEST_CASE("orthonormality and structure-constant algebra") {
  for (int n = 2; n <= 5; ++n) {
    const SuBasis b(n);
    const int s = b.size();
    for (int i = 0; i < s; ++i) {
      CHECK(std::abs(b.nu(i).trace()) < 1e-14);
      CHECK(max_abs(b.nu(i) - b.nu(i).adjoint()) == 0.0);
      for (int j = 0; j < s; ++j) {
        const cplx t = (b.nu(i) * b.nu(j)).trace();
        CHECK(std::abs(t - (i == j ? 2.0 : 0.0)) < 1e-13);
        // nu_i nu_j = (2/n) delta_ij + sum_k (d_ijk + i f_ijk) nu_k
        CMatrix rebuilt = (i == j ? 2.0 / n : 0.0) * CMatrix::Identity(n, n);
        for (int k = 0; k < s; ++k) rebuilt += cplx(b.d(i, j, k), b.f(i, j, k)) * b.nu(k);
        CHECK(max_abs(rebuilt - b.nu(i) * b.nu(j)) < 1e-13);
        for (int k = 0; k < s; ++k) {
          CHECK(b.f(i, j, k) == doctest::Approx(-b.f(j, i, k)));
          CHECK(b.f(i, j, k) == doctest::Approx(b.f(j, k, i)));
          CHECK(b.d(i, j, k) == doctest::Approx(b.d(j, i, k)));
        }
      }
    }
  }
}

TEST_CASE("vectorize round trip and validation") {
  std::mt19937 rng(7);
  for (int n = 2; n <= 4; ++n) {
    const SuBasis b(n);
    const CMatrix rho = random_density(n, rng);
    const PVector p = vectorize(rho, b);
    CHECK(p.coeffs.size() == n * n);
    CHECK(p.trace_component() == doctest::Approx(1.0 / n));
    CHECK(max_abs(devectorize(p, b) - rho) < 1e-14);
    for (int i = 0; i < b.size(); ++i) {
      CHECK(p.expectation(i) == doctest::Approx((rho * b.nu(i)).trace().real()));
    }
  }
  const SuBasis b(2);
  CMatrix bad(2, 2);
  bad << 0.5, 0.1, 0.2, 0.5;
  CHECK_THROWS_AS(vectorize(bad, b), ValidationError);
  CHECK_THROWS_AS(vectorize(CMatrix::Identity(2, 2), b), ValidationError);
  CHECK_THROWS_AS(vectorize(CMatrix::Identity(3, 3) / 3.0, b), ValidationError);
  CHECK_THROWS_AS(SuBasis(1), ValidationError);
  CHECK_THROWS_AS(two_level_state(1, 1, 0), ValidationError);
}

TEST_CASE("superoperator matrices match commutators and anticommutators") {
  std::mt19937 rng(11);
  for (int n = 2; n <= 4; ++n) {
    const SuBasis b(n);
    const CMatrix h = random_hermitian(n, rng);
    const CMatrix v = random_hermitian(n, rng);
    const RVector hc = hamiltonian_coefficients(h, b);
    const RVector vc = coupling_coefficients(v, b);
    CHECK(max_abs(coupling_operator(std::span<const double>(vc.data(), vc.size()), b) - v) < 1e-13);

    const CMatrix hx = build_hcross(std::span<const double>(hc.data(), hc.size()), b).matrix;
    const CMatrix vx = build_vcross(std::span<const double>(vc.data(), vc.size()), b).matrix;
    const CMatrix vo = build_vcirc(std::span<const double>(vc.data(), vc.size()), b).matrix;
    const CMatrix hx_ref = superoperator_matrix(b, [&](const CMatrix& x) { return CMatrix(h * x - x * h); });
    const CMatrix vx_ref = superoperator_matrix(b, [&](const CMatrix& x) { return CMatrix(v * x - x * v); });
    const CMatrix vo_ref = superoperator_matrix(b, [&](const CMatrix& x) { return CMatrix(v * x + x * v); });
    CHECK(max_abs(hx - hx_ref) < 1e-12);
    CHECK(max_abs(vx - vx_ref) < 1e-12);
    CHECK(max_abs(vo - vo_ref) < 1e-12);
    // the commutator never touches the trace
    CHECK(hx.row(b.dim() - 1).cwiseAbs().maxCoeff() == 0.0);

    const CMatrix rho = random_density(n, rng);
    const CVector p = vectorize(rho, b).coeffs.cast<cplx>();
    CHECK(max_abs(devectorize_operator(vx * p, b) - (v * rho - rho * v)) < 1e-12);
  }
  const SuBasis b(2);
  const std::vector<double> wrong(3, 0.0);
  CHECK_THROWS_AS(build_vcirc(wrong, b), ValidationError);
}
