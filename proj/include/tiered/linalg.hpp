#pragma once

#include "tiered/types.hpp"

namespace tiered {

// scaling-and-squaring Pade exponential (Eigen MatrixFunctions)
CMatrix expm(const CMatrix& a);

// exponential through a diagonalization; only for diagonalizable input,
// used as a cross-check
CMatrix expm_eig(const CMatrix& a);

// exp(-i h t) for a hermitian h, by eigendecomposition
CMatrix unitary_exp(const CMatrix& h, double t);

double max_abs(const CMatrix& a);

}  // namespace tiered
