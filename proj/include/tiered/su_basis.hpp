#pragma once

#include <functional>
#include <span>
#include <vector>

#include "tiered/types.hpp"

namespace tiered {

// Generalized Gell-Mann matrices for an n-level system, normalized so that
// Tr[nu_i nu_j] = 2 delta_ij.  Order: symmetric pairs (j<k, lexicographic),
// antisymmetric pairs (same order), then the n-1 diagonal matrices.
// For n = 2 this is sigma_x, sigma_y, sigma_z.
class SuBasis {
 public:
  explicit SuBasis(int n);

  int n() const { return n_; }
  int size() const { return n_ * n_ - 1; }   // number of generators
  int dim() const { return n_ * n_; }        // PVector length

  const CMatrix& nu(int i) const { return nu_[i]; }

  // f_ijk = Tr[[nu_i, nu_j] nu_k] / 4i,  d_ijk = Tr[{nu_i, nu_j} nu_k] / 4
  double f(int i, int j, int k) const { return f_[index(i, j, k)]; }
  double d(int i, int j, int k) const { return d_[index(i, j, k)]; }

 private:
  std::size_t index(int i, int j, int k) const {
    const std::size_t m = static_cast<std::size_t>(size());
    return (static_cast<std::size_t>(i) * m + j) * m + k;
  }

  int n_;
  std::vector<CMatrix> nu_;
  std::vector<double> f_;
  std::vector<double> d_;
};

SuBasis build_basis(int n);

// P_i = Tr[rho nu_i] / 2 for i < n^2-1, P_{n^2-1} = Tr[rho] / n.
struct PVector {
  RVector coeffs;

  PVector() = default;
  explicit PVector(RVector c) : coeffs(std::move(c)) {}

  int n() const;
  double trace_component() const { return coeffs(coeffs.size() - 1); }
  // <nu_i> = 2 P_i
  double expectation(int i) const { return 2.0 * coeffs(i); }
};

PVector vectorize(const CMatrix& rho, const SuBasis& basis);
CMatrix devectorize(const PVector& p, const SuBasis& basis);

// complex version for arbitrary operators, same component convention
CVector vectorize_operator(const CMatrix& a, const SuBasis& basis);
CMatrix devectorize_operator(const CVector& p, const SuBasis& basis);

// H = sum_i h_i nu_i (+ identity part, which is dropped); returns the n^2-1
// coefficients h_i = Tr[H nu_i] / 2
RVector hamiltonian_coefficients(const CMatrix& h, const SuBasis& basis);

// coupling V = sum_i v_i nu_i + v_{n^2} I; returns all n^2 coefficients
RVector coupling_coefficients(const CMatrix& v, const SuBasis& basis);
CMatrix coupling_operator(std::span<const double> v, const SuBasis& basis);

enum class SuperKind { Hcross, Vcross, Vcirc };

struct VectorizedOperator {
  SuperKind kind;
  CMatrix matrix;
};

// h has n^2-1 entries; matrix of rho -> [H, rho] acting on PVectors
VectorizedOperator build_hcross(std::span<const double> h, const SuBasis& basis);
// v has n^2 entries; rho -> [V, rho]
VectorizedOperator build_vcross(std::span<const double> v, const SuBasis& basis);
// v has n^2 entries; rho -> {V, rho}
VectorizedOperator build_vcirc(std::span<const double> v, const SuBasis& basis);

// G with vectorize(map(X)) = G * vectorize(X) for a linear map on operators
CMatrix superoperator_matrix(const SuBasis& basis,
                             const std::function<CMatrix(const CMatrix&)>& map);

// named two-level states
PVector two_level_state(double sx, double sy, double sz);

}  // namespace tiered
