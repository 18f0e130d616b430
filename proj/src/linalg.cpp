#include "tiered/linalg.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include "tiered/errors.hpp"

namespace tiered {

CMatrix expm(const CMatrix& a) {
  if (!a.allFinite()) throw NumericalError("matrix exponential of a non-finite matrix");
  return a.exp();
}

CMatrix expm_eig(const CMatrix& a) {
  Eigen::ComplexEigenSolver<CMatrix> es(a);
  if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
  const CMatrix& v = es.eigenvectors();
  const CVector e = es.eigenvalues().array().exp();
  return v * e.asDiagonal() * v.inverse();
}

CMatrix unitary_exp(const CMatrix& h, double t) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
  if (es.info() != Eigen::Success) throw NumericalError("hermitian eigendecomposition failed");
  const CVector ph = (-I * t * es.eigenvalues().cast<cplx>()).array().exp();
  return es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
}

double max_abs(const CMatrix& a) { return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff(); }

}  // namespace tiered
