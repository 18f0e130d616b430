#pragma once

#include <vector>

#include "tiered/types.hpp"

namespace tiered {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// n-point Gauss-Legendre on [a, b]; nodes by Newton iteration on P_n
QuadratureRule gauss_legendre(int n, double a, double b);

// trapezoid rule on possibly uneven abscissae
QuadratureRule trapezoid_weights(const std::vector<double>& x);

// running trapezoid integral of uniformly sampled values, out[0] = 0
RVector cumulative_trapezoid(const RVector& y, double h);

}  // namespace tiered
