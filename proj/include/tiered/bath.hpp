#pragma once

#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "tiered/types.hpp"

namespace tiered {

struct DampedMode {
  double omega = 0.0;  // rad/ps
  double g = 0.0;      // rad/ps
  double gamma = 0.0;  // damping by the wider environment, rad/ps
};

struct ThermalParams {
  double beta = 1.0;  // ps

  static ThermalParams from_beta(double beta);
  static ThermalParams from_kT(double kT);
  double kT() const { return 1.0 / beta; }
};

double thermal_occupation(double omega, const ThermalParams& thermal);
// coth(beta*omega/2) = 2N + 1
double thermal_coth(double omega, const ThermalParams& thermal);

// damping rate as a function of frequency: constant, or linear interpolation
// in a table (clamped at both ends)
struct GammaProfile {
  double constant = 0.0;
  std::vector<double> omega;
  std::vector<double> gamma;

  double operator()(double w) const;
  bool is_zero() const;
};

enum class CutoffForm { Gaussian, Exponential };

struct DiscreteSet {
  std::vector<DampedMode> modes;
};

// J(w) = alpha w^s exp(-(w/wc)^2) or alpha w^s exp(-w/wc)
struct OhmicFamily {
  double alpha = 0.0;
  double s = 1.0;
  double omega_c = 1.0;
  CutoffForm cutoff = CutoffForm::Gaussian;
  GammaProfile gamma;

  double J(double w) const;
};

struct Tabulated {
  std::vector<double> omega;
  std::vector<double> J;
  std::vector<double> gamma;  // empty means zero damping
};

struct QuadratureSettings {
  int nodes = 200;
  // upper frequency limit; zero picks 5 wc (gaussian) or 40 wc (exponential)
  double omega_max = 0.0;
};

struct SpectralDensity {
  std::variant<DiscreteSet, OhmicFamily, Tabulated> kind;
  QuadratureSettings quadrature;

  bool is_discrete() const { return std::holds_alternative<DiscreteSet>(kind); }
  // damping of the modes at frequency w (continuous kinds only)
  double gamma_at(double w) const;
};

SpectralDensity discrete(std::vector<DampedMode> modes);
SpectralDensity ohmic(double alpha, double s, double omega_c,
                      CutoffForm cutoff = CutoffForm::Gaussian, GammaProfile gamma = {});

// weighted frequency nodes: a discrete mode is a node with weight g^2
struct Discretization {
  std::vector<double> omega;
  std::vector<double> weight;
  std::vector<double> gamma;

  std::size_t size() const { return omega.size(); }
  void append(const Discretization& other);
};

Discretization frequency_quadrature(const SpectralDensity& spec);
Discretization frequency_quadrature(std::span<const SpectralDensity> parts);

// throws on negative couplings/rates/spectral values, warns when gamma > 0.2 omega
void validate(const SpectralDensity& spec);

struct KernelSamples {
  TimeGrid grid;
  RVector D;
  RVector D1;
  bool damped = false;  // some mode carries gamma > 0

  std::size_t size() const { return static_cast<std::size_t>(D.size()); }
  cplx alpha(std::size_t k) const { return {D(k), D1(k)}; }
};

KernelSamples operator+(const KernelSamples& a, const KernelSamples& b);

KernelSamples kernel(const SpectralDensity& spec, const ThermalParams& thermal, const TimeGrid& tau_grid);
KernelSamples kernel(std::span<const SpectralDensity> parts, const ThermalParams& thermal,
                     const TimeGrid& tau_grid);
KernelSamples kernel(const Discretization& nodes, const ThermalParams& thermal, const TimeGrid& tau_grid);

// alpha(tau) at a single point
cplx kernel_at(const Discretization& nodes, const ThermalParams& thermal, double tau);

// first grid time after which |alpha| stays below rel*|alpha(0)|; empty when
// the kernel has not decayed by the end of the grid
std::optional<double> memory_time(const KernelSamples& k, double rel = 1e-6);

// copy with every sample beyond tau_b set to zero
KernelSamples truncated(const KernelSamples& k, double tau_b);

}  // namespace tiered
