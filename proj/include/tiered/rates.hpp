#pragma once

#include <span>

#include "tiered/bath.hpp"
#include "tiered/types.hpp"

namespace tiered {

// Two-level rates in the eigenbasis of H_S = eps/2 sigma_z + Delta/2 sigma_x,
// Omega = sqrt(eps^2 + Delta^2), sigma~_z = (eps sigma_z + Delta sigma_x)/Omega.
struct RateReport {
  double omega_rabi = 0.0;
  double gamma_relax = 0.0;
  double gamma_dephase = 0.0;
  double lamb_shift = 0.0;  // coefficient of sigma~_z / 2
  // long-time <sigma~_z>; negative means the lower level is favoured
  double steady_sigma_z_tilde = 0.0;
  double t_eff = 0.0;  // k_B T_eff
  bool thermalizes = true;
};

double rabi_frequency(double eps, double Delta);

// k_B T for which tanh(Omega / 2 kT) = p
double effective_temperature(double polarization, double Omega);

RateReport rabi_rates(double eps, double Delta, const DampedMode& mode, const ThermalParams& thermal);
RateReport multimode_rates(double eps, double Delta, const SpectralDensity& spec, const ThermalParams& thermal);
RateReport multimode_rates(double eps, double Delta, std::span<const SpectralDensity> parts,
                           const ThermalParams& thermal);

// weak-coupling master-equation rates for a continuous spectral density
RateReport wcme_rates(double eps, double Delta, const SpectralDensity& spec, const ThermalParams& thermal);

// dP/dt = G P for the weak-coupling master equation on two-level PVectors
RMatrix wcme_generator(double eps, double Delta, const SpectralDensity& spec, const ThermalParams& thermal);

// principal value of int_0^inf J(w) coth(beta w/2) Omega / (Omega^2 - w^2) dw
double lamb_shift_integral(const SpectralDensity& spec, double Omega, const ThermalParams& thermal);

// J(w) for continuous kinds (linear interpolation for tables)
double spectral_value(const SpectralDensity& spec, double w);

}  // namespace tiered
