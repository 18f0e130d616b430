#include "tiered/rates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "tiered/errors.hpp"
#include "tiered/quadrature.hpp"
#include "tiered/su_basis.hpp"

namespace tiered {

namespace {

constexpr double kPi = std::numbers::pi;

// gamma / ((gamma/2)^2 + x^2)
double lorentz(double gamma, double x) { return gamma / (0.25 * gamma * gamma + x * x); }

// x / ((gamma/2)^2 + x^2), zero at the undamped pole
double dispersion(double gamma, double x) {
  const double den = 0.25 * gamma * gamma + x * x;
  return den == 0.0 ? 0.0 : x / den;
}

// running sums shared by all the rate formulas; p = pol / relax
struct RateSums {
  double relax = 0.0;
  double pol = 0.0;
  double pure = 0.0;  // dephasing in excess of relax/2
  double lamb = 0.0;
};

void add_mode(RateSums& s, double Omega, double eps, double Delta, double w, double weight, double gamma,
              const ThermalParams& thermal) {
  const double c = thermal_coth(w, thermal);
  const double dd = Delta * Delta / (Omega * Omega);
  const double ee = eps * eps / (Omega * Omega);
  const double lm = lorentz(gamma, Omega - w), lp = lorentz(gamma, Omega + w);
  s.relax += weight * c * dd * (lm + lp);
  s.pol += weight * dd * (lm - lp);
  s.pure += 2.0 * weight * c * ee * lorentz(gamma, w);
  s.lamb += weight * c * dd * (dispersion(gamma, Omega - w) + dispersion(gamma, Omega + w));
}

double limit_J_over_omega(const SpectralDensity& spec) {
  if (const auto* o = std::get_if<OhmicFamily>(&spec.kind)) {
    if (o->s > 1.0) return 0.0;
    if (o->s == 1.0) return o->alpha;
    throw UnsupportedError("sub-ohmic spectral density has no finite low-frequency limit J/omega");
  }
  const auto& t = std::get<Tabulated>(spec.kind);
  for (std::size_t i = 0; i < t.omega.size(); ++i) {
    if (t.omega[i] > 0.0) return t.J[i] / t.omega[i];
  }
  return 0.0;
}

double continuum_limit(const SpectralDensity& spec) {
  if (spec.quadrature.omega_max > 0.0) return spec.quadrature.omega_max;
  if (const auto* o = std::get_if<OhmicFamily>(&spec.kind)) {
    return (o->cutoff == CutoffForm::Gaussian ? 5.0 : 40.0) * o->omega_c;
  }
  return std::get<Tabulated>(spec.kind).omega.back();
}

void add_wcme(RateSums& s, double Omega, double eps, double Delta, const SpectralDensity& spec,
              const ThermalParams& thermal) {
  const double dd = Delta * Delta / (Omega * Omega);
  const double ee = eps * eps / (Omega * Omega);
  const double j = spectral_value(spec, Omega);
  s.relax += 2.0 * kPi * dd * j * thermal_coth(Omega, thermal);
  s.pol += 2.0 * kPi * dd * j;
  if (ee > 0.0) s.pure += 4.0 * kPi * ee * thermal.kT() * limit_J_over_omega(spec);
  s.lamb += 2.0 * dd * lamb_shift_integral(spec, Omega, thermal);
}

RateReport finish(const RateSums& s, double Omega, bool fallback_ok) {
  RateReport r;
  r.omega_rabi = Omega;
  r.gamma_relax = s.relax;
  r.gamma_dephase = 0.5 * s.relax + s.pure;
  r.lamb_shift = s.lamb;
  if (s.relax > 0.0) {
    const double p = s.pol / s.relax;
    r.steady_sigma_z_tilde = -p;
    r.t_eff = effective_temperature(p, Omega);
  } else {
    r.thermalizes = false;
    if (!fallback_ok) {
      r.steady_sigma_z_tilde = std::numeric_limits<double>::quiet_NaN();
      r.t_eff = std::numeric_limits<double>::quiet_NaN();
    }
  }
  return r;
}

double checked_omega(double eps, double Delta) {
  const double Omega = rabi_frequency(eps, Delta);
  if (!(Omega > 0.0) || !std::isfinite(Omega)) throw ValidationError("Rabi frequency must be positive");
  return Omega;
}

}  // namespace

double rabi_frequency(double eps, double Delta) { return std::sqrt(eps * eps + Delta * Delta); }

double effective_temperature(double polarization, double Omega) {
  if (polarization >= 1.0) return 0.0;
  if (polarization == 0.0) return std::numeric_limits<double>::infinity();
  if (polarization <= -1.0) return -0.0;
  return Omega / (2.0 * std::atanh(polarization));
}

double spectral_value(const SpectralDensity& spec, double w) {
  if (const auto* o = std::get_if<OhmicFamily>(&spec.kind)) return o->J(w);
  if (const auto* t = std::get_if<Tabulated>(&spec.kind)) {
    if (w < t->omega.front() || w > t->omega.back()) return 0.0;
    GammaProfile interp{0.0, t->omega, t->J};
    return interp(w);
  }
  throw UnsupportedError("a discrete mode set has no smooth spectral density value");
}

double lamb_shift_integral(const SpectralDensity& spec, double Omega, const ThermalParams& thermal) {
  if (spec.is_discrete()) throw UnsupportedError("principal-value Lamb shift needs a continuous spectral density");
  validate(spec);
  const int nodes = std::max(spec.quadrature.nodes, 200);
  auto jc = [&](double w) { return w > 0.0 ? spectral_value(spec, w) * thermal_coth(w, thermal) : 0.0; };
  // F(w) = h(w) / (Omega - w), h(w) = J coth Omega / (Omega + w); the pair
  // w = Omega -/+ u cancels the pole over [0, 2 Omega]
  auto h = [&](double w) { return jc(w) * Omega / (Omega + w); };
  double total = 0.0;
  const QuadratureRule near = gauss_legendre(nodes, 0.0, Omega);
  for (std::size_t i = 0; i < near.nodes.size(); ++i) {
    const double u = near.nodes[i];
    total += near.weights[i] * (h(Omega - u) - h(Omega + u)) / u;
  }
  const double wmax = continuum_limit(spec);
  if (wmax > 2.0 * Omega) {
    const QuadratureRule far = gauss_legendre(nodes, 2.0 * Omega, wmax);
    for (std::size_t i = 0; i < far.nodes.size(); ++i) {
      const double w = far.nodes[i];
      total += far.weights[i] * jc(w) * Omega / (Omega * Omega - w * w);
    }
  }
  return total;
}

RateReport rabi_rates(double eps, double Delta, const DampedMode& mode, const ThermalParams& thermal) {
  const double Omega = checked_omega(eps, Delta);
  validate(discrete({mode}));
  RateSums s;
  add_mode(s, Omega, eps, Delta, mode.omega, mode.g * mode.g, mode.gamma, thermal);
  RateReport r = finish(s, Omega, true);
  // the closed-form long-time state holds for any damping, reached or not
  const double hg = 0.5 * mode.gamma;
  const double p = 2.0 * Omega * mode.omega / (hg * hg + Omega * Omega + mode.omega * mode.omega) *
                   std::tanh(0.5 * thermal.beta * mode.omega);
  r.steady_sigma_z_tilde = -p;
  r.t_eff = effective_temperature(p, Omega);
  if (mode.gamma == 0.0) {
    r.gamma_relax = 0.0;
    r.gamma_dephase = 0.0;
    r.thermalizes = false;
  }
  return r;
}

RateReport multimode_rates(double eps, double Delta, const SpectralDensity& spec, const ThermalParams& thermal) {
  return multimode_rates(eps, Delta, std::span<const SpectralDensity>(&spec, 1), thermal);
}

RateReport multimode_rates(double eps, double Delta, std::span<const SpectralDensity> parts,
                           const ThermalParams& thermal) {
  const double Omega = checked_omega(eps, Delta);
  RateSums s;
  for (const SpectralDensity& spec : parts) {
    bool undamped_continuum = false;
    if (const auto* o = std::get_if<OhmicFamily>(&spec.kind)) undamped_continuum = o->gamma.is_zero();
    if (const auto* t = std::get_if<Tabulated>(&spec.kind)) {
      undamped_continuum = std::all_of(t->gamma.begin(), t->gamma.end(), [](double g) { return g == 0.0; });
    }
    if (undamped_continuum) {
      add_wcme(s, Omega, eps, Delta, spec, thermal);
      continue;
    }
    const Discretization d = frequency_quadrature(spec);
    for (std::size_t i = 0; i < d.size(); ++i) {
      add_mode(s, Omega, eps, Delta, d.omega[i], d.weight[i], d.gamma[i], thermal);
    }
  }
  return finish(s, Omega, false);
}

RateReport wcme_rates(double eps, double Delta, const SpectralDensity& spec, const ThermalParams& thermal) {
  if (spec.is_discrete()) {
    throw UnsupportedError("weak-coupling rates need a continuous spectral density (J(Omega) is undefined)");
  }
  validate(spec);
  const double Omega = checked_omega(eps, Delta);
  RateSums s;
  add_wcme(s, Omega, eps, Delta, spec, thermal);
  return finish(s, Omega, false);
}

RMatrix wcme_generator(double eps, double Delta, const SpectralDensity& spec, const ThermalParams& thermal) {
  const RateReport r = wcme_rates(eps, Delta, spec, thermal);
  const double Omega = r.omega_rabi;
  const SuBasis basis(2);
  const CMatrix& sx = basis.nu(0);
  const CMatrix& sz = basis.nu(2);
  const CMatrix szt = (eps * sz + Delta * sx) / Omega;
  const CMatrix h = 0.5 * eps * sz + 0.5 * Delta * sx + 0.5 * r.lamb_shift * szt;

  Eigen::SelfAdjointEigenSolver<CMatrix> es(szt);
  const CVector lower = es.eigenvectors().col(0);
  const CVector upper = es.eigenvectors().col(1);
  const CMatrix sm = lower * upper.adjoint();
  const CMatrix sp = sm.adjoint();

  const double p = r.thermalizes ? -r.steady_sigma_z_tilde : 0.0;
  const double down = 0.5 * r.gamma_relax * (1.0 + p);
  const double up = 0.5 * r.gamma_relax * (1.0 - p);
  const double phi = 0.5 * (r.gamma_dephase - 0.5 * r.gamma_relax);

  auto dissipator = [](const CMatrix& l, const CMatrix& x) {
    const CMatrix ld = l.adjoint();
    return CMatrix(l * x * ld - 0.5 * (ld * l * x + x * ld * l));
  };
  const CMatrix g = superoperator_matrix(basis, [&](const CMatrix& x) {
    CMatrix out = -I * (h * x - x * h);
    out += down * dissipator(sm, x) + up * dissipator(sp, x);
    out += phi * (szt * x * szt - x);
    return out;
  });
  if (g.imag().cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, g.cwiseAbs().maxCoeff())) {
    throw NumericalError("weak-coupling generator is not real in the Gell-Mann representation");
  }
  RMatrix out = g.real();
  out.row(3).setZero();
  return out;
}

}  // namespace tiered
