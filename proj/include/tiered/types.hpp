#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstddef>

namespace tiered {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

inline constexpr cplx I{0.0, 1.0};

// uniform grid t_k = k*dt, k = 0..steps
struct TimeGrid {
  double dt = 0.0;
  std::size_t steps = 0;

  std::size_t size() const { return steps + 1; }
  double time(std::size_t k) const { return static_cast<double>(k) * dt; }
  double t_max() const { return time(steps); }

  // smallest grid with spacing dt reaching at least t_max
  static TimeGrid covering(double t_max, double dt);
};

}  // namespace tiered
