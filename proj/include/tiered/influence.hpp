#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "tiered/bath.hpp"
#include "tiered/su_basis.hpp"

namespace tiered {

struct HamiltonianSegment {
  double start = 0.0;  // ps
  RVector coeffs;      // n^2-1 Gell-Mann coefficients
};

struct SystemModel {
  std::shared_ptr<const SuBasis> basis;
  std::vector<HamiltonianSegment> schedule;  // first segment starts at 0
  RVector coupling;                          // n^2 coefficients, last one multiplies I

  int n() const { return basis->n(); }
  // the last segment extends to infinity
  const RVector& hamiltonian_at(double t) const;
  bool is_static() const { return schedule.size() == 1; }
  void validate() const;

  static SystemModel make(int n, std::vector<HamiltonianSegment> schedule, RVector coupling);
  // H = eps/2 sigma_z + Delta/2 sigma_x, V = sigma_z
  static SystemModel two_level(double eps, double Delta);
};

// time-ordered product of the segment exponentials exp(-i H^x dt)
CMatrix propagator(const SystemModel& model, double t);

// U(t_k) and the interaction-picture V^x, V^o on a uniform grid
class InteractionFrames {
 public:
  InteractionFrames(const SystemModel& model, const TimeGrid& grid);

  const TimeGrid& grid() const { return grid_; }
  const CMatrix& U(std::size_t k) const { return u_[k]; }
  const CMatrix& vcross(std::size_t k) const { return vx_[k]; }
  const CMatrix& vcirc(std::size_t k) const { return vo_[k]; }

 private:
  TimeGrid grid_;
  std::vector<CMatrix> u_, vx_, vo_;
};

struct InfluenceMatrix {
  TimeGrid grid;
  std::vector<CMatrix> theta;

  std::size_t size() const { return theta.size(); }
  InfluenceMatrix& operator+=(const InfluenceMatrix& other);
};

struct ThetaOptions {
  // kernel samples beyond this lag are dropped; empty picks the time where
  // |alpha| falls below memory_tolerance * |alpha(0)|
  std::optional<double> memory_time;
  double memory_tolerance = 1e-6;
  // false keeps every kernel sample (needed for exact additivity checks)
  bool truncate = true;
};

InfluenceMatrix theta_quadrature(const SystemModel& model, const KernelSamples& kernel, const TimeGrid& grid,
                                 const ThetaOptions& options = {});
// same, reusing precomputed frames
InfluenceMatrix theta_quadrature(const InteractionFrames& frames, const KernelSamples& kernel,
                                 const ThetaOptions& options = {});

struct SpinBosonTheta {
  TimeGrid grid;
  std::vector<CMatrix> relax, lamb_shift, thermal, rotating_wave;
  // scalar exponent theta_relax(t) = -2 int_0^t D(tau)(t - tau) cos(Delta tau)
  RVector relax_exponent;

  InfluenceMatrix sum() const;
};

// closed form for H = Delta/2 sigma_x, V = sigma_z
SpinBosonTheta theta_spinboson(const SystemModel& model, const KernelSamples& kernel, const TimeGrid& grid,
                               const ThetaOptions& options = {});

struct ReducedTrajectory {
  TimeGrid grid;
  std::vector<PVector> states;
  double max_imag = 0.0;  // largest imaginary part discarded from the state vectors

  // <nu_i>(t_k)
  double expectation(std::size_t k, int i) const { return states[k].expectation(i); }
};

ReducedTrajectory evolve(const SystemModel& model, const InfluenceMatrix& theta, const PVector& rho0);

struct ReorganizationTimes {
  double relax = 0.0;
  double lamb_shift = 0.0;
  double thermal = 0.0;
};

ReorganizationTimes reorg_times(const KernelSamples& kernel, double Delta, double rel = 1e-6);
PVector steady_state_spinboson(const KernelSamples& kernel, double Delta, double rel = 1e-6);

// largest |eigenvalue| of H^x over the schedule, i.e. the fastest system frequency
double fastest_frequency(const SystemModel& model);

// the memory cut actually applied for these options (empty: no cut)
std::optional<double> effective_memory_time(const KernelSamples& kernel, const ThetaOptions& options);

}  // namespace tiered
