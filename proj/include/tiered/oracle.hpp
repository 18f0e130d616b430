#pragma once

#include <Eigen/Sparse>
#include <functional>
#include <vector>

#include "tiered/bath.hpp"
#include "tiered/influence.hpp"

namespace tiered {

enum class OracleIntegrator {
  Adaptive,  // Dormand-Prince 5(4) with step-size control
  Rational   // (3,4) Pade approximant of exp(hL), one sparse LU per pole pair
};

struct FockConfig {
  std::vector<DampedMode> modes;
  // levels kept per mode; empty or zero entries are chosen from tail_tolerance
  std::vector<int> n_fock;
  double tail_tolerance = 1e-8;
  double rtol = 1e-8;
  double atol = 1e-10;
  OracleIntegrator integrator = OracleIntegrator::Adaptive;
  // rational: largest step (zero means one step per output interval);
  // adaptive: cap on the step (zero means none)
  double max_step = 0.0;
  std::size_t max_steps = 100'000'000;
};

// weight of the thermal distribution at or above level n_fock: (N/(N+1))^n_fock
double thermal_tail(double occupation, int n_fock);
// smallest truncation (at least 2) with thermal_tail below tol
int fock_truncation(const DampedMode& mode, const ThermalParams& thermal, double tol);

using SparseMatrix = Eigen::SparseMatrix<cplx>;

// system (x) truncated damped modes, Lindblad damping of every mode
class FockLindblad {
 public:
  FockLindblad(const SystemModel& model, const FockConfig& config, const ThermalParams& thermal);

  int system_dim() const { return ns_; }
  int joint_dim() const { return dim_; }
  const std::vector<int>& levels() const { return levels_; }
  const SparseMatrix& liouvillian(std::size_t segment = 0) const { return liouvillians_[segment]; }
  // joint-space annihilation operator of mode k
  SparseMatrix annihilation(std::size_t k) const;

  // vec of rho_s (x) truncated thermal states
  CVector thermal_product_state(const CMatrix& rho_s) const;
  CVector product_state(const CMatrix& rho_s, const std::vector<CMatrix>& mode_states) const;
  CMatrix system_state(const CVector& v) const;
  CMatrix mode_state(const CVector& v, std::size_t k) const;
  cplx trace(const CVector& v) const;
  // Tr[op rho] for a joint-space operator
  cplx expectation(const CVector& v, const SparseMatrix& op) const;

  using Observer = std::function<void(std::size_t index, double t, const CVector& state)>;
  // integrate from t = 0 through the ascending times, calling observer at each
  void evolve(CVector state, const std::vector<double>& times, const Observer& observer) const;

  // stationary state of the (single-segment) Liouvillian
  CVector steady_state() const;

 private:
  std::vector<double> breakpoints() const;
  std::size_t segment_at(double t) const;
  void evolve_adaptive(CVector& y, double t0, double t1, const SparseMatrix& L, double& h) const;

  SystemModel model_;
  FockConfig config_;
  ThermalParams thermal_;
  int ns_ = 0;
  int fock_dim_ = 1;  // product of mode levels
  int dim_ = 0;
  std::vector<int> levels_;
  std::vector<SparseMatrix> liouvillians_;
};

struct OracleTrajectory {
  std::vector<double> times;
  std::vector<CMatrix> rho;  // reduced system density matrices
  std::vector<PVector> states;
  std::vector<int> levels;
  double max_trace_error = 0.0;
  double max_hermiticity_error = 0.0;
};

OracleTrajectory lindblad_evolve(const SystemModel& model, const FockConfig& config, const ThermalParams& thermal,
                                 const CMatrix& rho0_system, const std::vector<double>& times);
OracleTrajectory lindblad_evolve(const SystemModel& model, const FockConfig& config, const ThermalParams& thermal,
                                 const CMatrix& rho0_system, const TimeGrid& grid);

// reduced stationary state
CMatrix lindblad_steady_state(const SystemModel& model, const FockConfig& config, const ThermalParams& thermal);

// second-order time-convolutionless master equation in generator form,
// integrated by RK4 with step grid.dt; the kernel must be sampled at
// grid.dt / 2 and reach grid.t_max
ReducedTrajectory tcl2_reference(const SystemModel& model, const KernelSamples& kernel, const TimeGrid& grid,
                                 const PVector& rho0);

// integral of the interaction-picture second-order TCL generator on the
// kernel's own grid, built from matrix commutators
InfluenceMatrix tcl2_theta(const SystemModel& model, const KernelSamples& kernel, const TimeGrid& grid);

// P(t) = exp(G t) P(0) with the weak-coupling generator
ReducedTrajectory wcme_evolve(double eps, double Delta, const SpectralDensity& spec, const ThermalParams& thermal,
                              const PVector& rho0, const TimeGrid& grid);

// coefficients of the (3,4) Pade approximant of exp(z) as sum_i r_i / (z - p_i)
struct RationalExpansion {
  std::vector<cplx> poles;
  std::vector<cplx> residues;
  cplx operator()(cplx z) const;
};
RationalExpansion pade34_expansion();

}  // namespace tiered
