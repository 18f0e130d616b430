#include "tiered/su_basis.hpp"

#include <cmath>
#include <string>

#include "tiered/errors.hpp"

namespace tiered {

namespace {

constexpr double kHermTol = 1e-10;

void require_square(const CMatrix& a, int n, const char* what) {
  if (a.rows() != n || a.cols() != n) {
    throw ValidationError(std::string(what) + ": expected a " + std::to_string(n) + "x" +
                          std::to_string(n) + " matrix, got " + std::to_string(a.rows()) + "x" +
                          std::to_string(a.cols()));
  }
}

void require_hermitian(const CMatrix& a, const char* what) {
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if ((a - a.adjoint()).cwiseAbs().maxCoeff() > kHermTol * scale) {
    throw ValidationError(std::string(what) + " is not hermitian");
  }
}

}  // namespace

SuBasis::SuBasis(int n) : n_(n) {
  if (n < 2) throw ValidationError("basis dimension must be at least 2, got " + std::to_string(n));

  for (int j = 0; j < n; ++j) {
    for (int k = j + 1; k < n; ++k) {
      CMatrix m = CMatrix::Zero(n, n);
      m(j, k) = 1.0;
      m(k, j) = 1.0;
      nu_.push_back(m);
    }
  }
  for (int j = 0; j < n; ++j) {
    for (int k = j + 1; k < n; ++k) {
      CMatrix m = CMatrix::Zero(n, n);
      m(j, k) = -I;
      m(k, j) = I;
      nu_.push_back(m);
    }
  }
  for (int l = 1; l < n; ++l) {
    CMatrix m = CMatrix::Zero(n, n);
    const double c = std::sqrt(2.0 / (l * (l + 1.0)));
    for (int q = 0; q < l; ++q) m(q, q) = c;
    m(l, l) = -c * l;
    nu_.push_back(m);
  }

  const int s = size();
  const std::size_t total = static_cast<std::size_t>(s) * s * s;
  f_.assign(total, 0.0);
  d_.assign(total, 0.0);
  for (int i = 0; i < s; ++i) {
    for (int j = 0; j < s; ++j) {
      const CMatrix prod = nu_[i] * nu_[j];
      const CMatrix comm = prod - nu_[j] * nu_[i];
      const CMatrix acomm = prod + nu_[j] * nu_[i];
      for (int k = 0; k < s; ++k) {
        const cplx tc = (comm * nu_[k]).trace() / (4.0 * I);
        const cplx ta = (acomm * nu_[k]).trace() / 4.0;
        f_[index(i, j, k)] = std::abs(tc.real()) < 1e-15 ? 0.0 : tc.real();
        d_[index(i, j, k)] = std::abs(ta.real()) < 1e-15 ? 0.0 : ta.real();
      }
    }
  }
}

SuBasis build_basis(int n) { return SuBasis(n); }

int PVector::n() const {
  const int m = static_cast<int>(std::lround(std::sqrt(static_cast<double>(coeffs.size()))));
  return m;
}

CVector vectorize_operator(const CMatrix& a, const SuBasis& basis) {
  const int n = basis.n();
  require_square(a, n, "operator");
  CVector p(basis.dim());
  for (int i = 0; i < basis.size(); ++i) p(i) = (a * basis.nu(i)).trace() / 2.0;
  p(basis.dim() - 1) = a.trace() / static_cast<double>(n);
  return p;
}

CMatrix devectorize_operator(const CVector& p, const SuBasis& basis) {
  if (p.size() != basis.dim()) {
    throw ValidationError("vector length " + std::to_string(p.size()) + " does not match basis size " +
                          std::to_string(basis.dim()));
  }
  const int n = basis.n();
  CMatrix a = p(basis.dim() - 1) * CMatrix::Identity(n, n);
  for (int i = 0; i < basis.size(); ++i) a += p(i) * basis.nu(i);
  return a;
}

PVector vectorize(const CMatrix& rho, const SuBasis& basis) {
  require_square(rho, basis.n(), "density matrix");
  require_hermitian(rho, "density matrix");
  if (std::abs(rho.trace() - 1.0) > kHermTol) {
    throw ValidationError("density matrix trace is " + std::to_string(rho.trace().real()) +
                          ", expected 1");
  }
  return PVector(vectorize_operator(rho, basis).real());
}

CMatrix devectorize(const PVector& p, const SuBasis& basis) {
  return devectorize_operator(p.coeffs.cast<cplx>(), basis);
}

RVector hamiltonian_coefficients(const CMatrix& h, const SuBasis& basis) {
  require_square(h, basis.n(), "hamiltonian");
  require_hermitian(h, "hamiltonian");
  return vectorize_operator(h, basis).head(basis.size()).real();
}

RVector coupling_coefficients(const CMatrix& v, const SuBasis& basis) {
  require_square(v, basis.n(), "coupling operator");
  require_hermitian(v, "coupling operator");
  return vectorize_operator(v, basis).real();
}

CMatrix coupling_operator(std::span<const double> v, const SuBasis& basis) {
  if (static_cast<int>(v.size()) != basis.dim()) {
    throw ValidationError("coupling vector needs " + std::to_string(basis.dim()) + " entries, got " +
                          std::to_string(v.size()));
  }
  CVector p(basis.dim());
  for (int i = 0; i < basis.dim(); ++i) p(i) = v[i];
  return devectorize_operator(p, basis);
}

VectorizedOperator build_hcross(std::span<const double> h, const SuBasis& basis) {
  const int s = basis.size();
  if (static_cast<int>(h.size()) != s) {
    throw ValidationError("hamiltonian vector needs " + std::to_string(s) + " entries, got " +
                          std::to_string(h.size()));
  }
  CMatrix m = CMatrix::Zero(basis.dim(), basis.dim());
  for (int i = 0; i < s; ++i) {
    for (int j = 0; j < s; ++j) {
      double acc = 0.0;
      for (int k = 0; k < s; ++k) acc += h[k] * basis.f(k, i, j);
      m(i, j) = -2.0 * I * acc;
    }
  }
  return {SuperKind::Hcross, m};
}

VectorizedOperator build_vcross(std::span<const double> v, const SuBasis& basis) {
  if (static_cast<int>(v.size()) != basis.dim()) {
    throw ValidationError("coupling vector needs " + std::to_string(basis.dim()) + " entries, got " +
                          std::to_string(v.size()));
  }
  // identity component commutes with everything and drops out
  VectorizedOperator out = build_hcross(v.first(basis.size()), basis);
  out.kind = SuperKind::Vcross;
  return out;
}

VectorizedOperator build_vcirc(std::span<const double> v, const SuBasis& basis) {
  const int s = basis.size();
  const int n2 = basis.dim();
  if (static_cast<int>(v.size()) != n2) {
    throw ValidationError("coupling vector needs " + std::to_string(n2) + " entries, got " +
                          std::to_string(v.size()));
  }
  const double v0 = v[n2 - 1];
  CMatrix m = CMatrix::Zero(n2, n2);
  for (int i = 0; i < s; ++i) {
    for (int j = 0; j < s; ++j) {
      double acc = 0.0;
      for (int k = 0; k < s; ++k) acc += v[k] * basis.d(k, i, j);
      m(i, j) = 2.0 * acc;
    }
    m(i, i) += 2.0 * v0;
    m(i, n2 - 1) = 2.0 * v[i];
    m(n2 - 1, i) = 4.0 / basis.n() * v[i];
  }
  m(n2 - 1, n2 - 1) = 2.0 * v0;
  return {SuperKind::Vcirc, m};
}

CMatrix superoperator_matrix(const SuBasis& basis,
                             const std::function<CMatrix(const CMatrix&)>& map) {
  const int n2 = basis.dim();
  const int n = basis.n();
  CMatrix g(n2, n2);
  for (int j = 0; j < n2; ++j) {
    const CMatrix x = j < basis.size() ? basis.nu(j) : CMatrix(CMatrix::Identity(n, n));
    g.col(j) = vectorize_operator(map(x), basis);
  }
  return g;
}

PVector two_level_state(double sx, double sy, double sz) {
  const double r = std::sqrt(sx * sx + sy * sy + sz * sz);
  if (r > 1.0 + 1e-12) throw ValidationError("Bloch vector length exceeds 1");
  RVector c(4);
  c << 0.5 * sx, 0.5 * sy, 0.5 * sz, 0.5;
  return PVector(c);
}

}  // namespace tiered
