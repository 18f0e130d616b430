#include "tiered/bath.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tiered/errors.hpp"
#include "tiered/quadrature.hpp"

namespace tiered {

ThermalParams ThermalParams::from_beta(double beta) {
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw ValidationError("inverse temperature must be positive and finite");
  }
  return ThermalParams{beta};
}

ThermalParams ThermalParams::from_kT(double kT) {
  if (!(kT > 0.0) || !std::isfinite(kT)) throw ValidationError("temperature must be positive and finite");
  return ThermalParams{1.0 / kT};
}

double thermal_occupation(double omega, const ThermalParams& thermal) {
  if (!(omega > 0.0)) throw ValidationError("thermal occupation needs omega > 0");
  return 1.0 / std::expm1(thermal.beta * omega);
}

double thermal_coth(double omega, const ThermalParams& thermal) {
  if (!(omega > 0.0)) throw ValidationError("thermal factor needs omega > 0");
  const double x = 0.5 * thermal.beta * omega;
  if (x > 20.0) return 1.0;
  return 1.0 / std::tanh(x);
}

double GammaProfile::operator()(double w) const {
  if (omega.empty()) return constant;
  if (w <= omega.front()) return gamma.front();
  if (w >= omega.back()) return gamma.back();
  const auto it = std::upper_bound(omega.begin(), omega.end(), w);
  const std::size_t i = static_cast<std::size_t>(it - omega.begin());
  const double t = (w - omega[i - 1]) / (omega[i] - omega[i - 1]);
  return (1.0 - t) * gamma[i - 1] + t * gamma[i];
}

bool GammaProfile::is_zero() const {
  if (omega.empty()) return constant == 0.0;
  return std::all_of(gamma.begin(), gamma.end(), [](double g) { return g == 0.0; });
}

double OhmicFamily::J(double w) const {
  if (w <= 0.0) return 0.0;
  const double x = w / omega_c;
  const double cut = cutoff == CutoffForm::Gaussian ? std::exp(-x * x) : std::exp(-x);
  return alpha * std::pow(w, s) * cut;
}

double SpectralDensity::gamma_at(double w) const {
  if (const auto* o = std::get_if<OhmicFamily>(&kind)) return o->gamma(w);
  if (const auto* t = std::get_if<Tabulated>(&kind)) {
    if (t->gamma.empty()) return 0.0;
    GammaProfile p{0.0, t->omega, t->gamma};
    return p(w);
  }
  return 0.0;
}

SpectralDensity discrete(std::vector<DampedMode> modes) {
  return SpectralDensity{DiscreteSet{std::move(modes)}, {}};
}

SpectralDensity ohmic(double alpha, double s, double omega_c, CutoffForm cutoff, GammaProfile gamma) {
  return SpectralDensity{OhmicFamily{alpha, s, omega_c, cutoff, std::move(gamma)}, {}};
}

void Discretization::append(const Discretization& other) {
  omega.insert(omega.end(), other.omega.begin(), other.omega.end());
  weight.insert(weight.end(), other.weight.begin(), other.weight.end());
  gamma.insert(gamma.end(), other.gamma.begin(), other.gamma.end());
}

namespace {

void validate_profile(const GammaProfile& p) {
  if (p.omega.size() != p.gamma.size()) throw ValidationError("damping profile table sizes differ");
  if (p.constant < 0.0) throw ValidationError("damping rate must be non-negative");
  for (std::size_t i = 0; i < p.gamma.size(); ++i) {
    if (p.gamma[i] < 0.0) throw ValidationError("damping rate must be non-negative");
    if (i > 0 && !(p.omega[i] > p.omega[i - 1])) {
      throw ValidationError("damping profile frequencies must be increasing");
    }
  }
}

}  // namespace

void validate(const SpectralDensity& spec) {
  if (const auto* d = std::get_if<DiscreteSet>(&spec.kind)) {
    for (const DampedMode& m : d->modes) {
      if (!(m.omega > 0.0) || !std::isfinite(m.omega)) throw ValidationError("mode frequency must be positive");
      if (m.g < 0.0 || !std::isfinite(m.g)) throw ValidationError("mode coupling must be non-negative");
      if (m.gamma < 0.0 || !std::isfinite(m.gamma)) throw ValidationError("mode damping must be non-negative");
      if (m.gamma > 0.2 * m.omega) {
        warn("mode at omega=" + std::to_string(m.omega) + " has gamma=" + std::to_string(m.gamma) +
             " > 0.2 omega; the weak-damping assumption is stretched");
      }
    }
  } else if (const auto* o = std::get_if<OhmicFamily>(&spec.kind)) {
    if (!(o->alpha >= 0.0)) throw ValidationError("spectral prefactor must be non-negative");
    if (!(o->omega_c > 0.0)) throw ValidationError("cutoff frequency must be positive");
    if (!(o->s > 0.0)) throw ValidationError("spectral exponent must be positive");
    validate_profile(o->gamma);
  } else {
    const auto& t = std::get<Tabulated>(spec.kind);
    if (t.omega.size() != t.J.size()) throw ValidationError("tabulated spectral density sizes differ");
    if (!t.gamma.empty() && t.gamma.size() != t.omega.size()) {
      throw ValidationError("tabulated damping must match the frequency grid");
    }
    if (t.omega.size() < 2) throw ValidationError("tabulated spectral density needs at least two points");
    for (std::size_t i = 0; i < t.omega.size(); ++i) {
      if (t.omega[i] < 0.0) throw ValidationError("tabulated frequencies must be non-negative");
      if (t.J[i] < 0.0) throw ValidationError("spectral density must be non-negative");
      if (!t.gamma.empty() && t.gamma[i] < 0.0) throw ValidationError("damping rate must be non-negative");
    }
  }
  if (!spec.is_discrete() && spec.quadrature.nodes < 2) {
    throw ValidationError("frequency quadrature needs at least two nodes");
  }
}

Discretization frequency_quadrature(const SpectralDensity& spec) {
  validate(spec);
  Discretization out;
  if (const auto* d = std::get_if<DiscreteSet>(&spec.kind)) {
    for (const DampedMode& m : d->modes) {
      out.omega.push_back(m.omega);
      out.weight.push_back(m.g * m.g);
      out.gamma.push_back(m.gamma);
    }
    return out;
  }
  if (const auto* o = std::get_if<OhmicFamily>(&spec.kind)) {
    double wmax = spec.quadrature.omega_max;
    if (wmax <= 0.0) wmax = (o->cutoff == CutoffForm::Gaussian ? 5.0 : 40.0) * o->omega_c;
    const QuadratureRule rule = gauss_legendre(spec.quadrature.nodes, 0.0, wmax);
    double jmax = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      const double w = rule.nodes[i];
      const double j = o->J(w);
      jmax = std::max(jmax, j);
      out.omega.push_back(w);
      out.weight.push_back(rule.weights[i] * j);
      out.gamma.push_back(o->gamma(w));
    }
    if (jmax > 0.0 && o->J(wmax) > 1e-8 * jmax) {
      throw ConfigurationError("spectral density has not decayed by omega_max=" + std::to_string(wmax) +
                               "; raise the quadrature limit");
    }
    return out;
  }
  const auto& t = std::get<Tabulated>(spec.kind);
  const QuadratureRule rule = trapezoid_weights(t.omega);
  for (std::size_t i = 0; i < t.omega.size(); ++i) {
    const double w = t.omega[i];
    const double wt = rule.weights[i] * t.J[i];
    if (w <= 0.0) {
      // zero-frequency node: fine when J vanishes there
      if (wt != 0.0) throw ValidationError("tabulated spectral density must vanish at omega = 0");
      continue;
    }
    out.omega.push_back(w);
    out.weight.push_back(wt);
    out.gamma.push_back(t.gamma.empty() ? 0.0 : t.gamma[i]);
  }
  return out;
}

Discretization frequency_quadrature(std::span<const SpectralDensity> parts) {
  Discretization out;
  for (const SpectralDensity& p : parts) out.append(frequency_quadrature(p));
  return out;
}

KernelSamples operator+(const KernelSamples& a, const KernelSamples& b) {
  if (a.size() != b.size() || a.grid.dt != b.grid.dt) {
    throw ConfigurationError("kernel samples live on different grids");
  }
  return KernelSamples{a.grid, a.D + b.D, a.D1 + b.D1, a.damped || b.damped};
}

KernelSamples kernel(const Discretization& nodes, const ThermalParams& thermal, const TimeGrid& tau_grid) {
  if (!(thermal.beta > 0.0)) throw ValidationError("inverse temperature must be positive");
  const std::size_t n = tau_grid.size();
  KernelSamples out{tau_grid, RVector::Zero(n), RVector::Zero(n), false};
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    const double w = nodes.omega[j];
    const double wt = nodes.weight[j];
    const double hg = 0.5 * nodes.gamma[j];
    if (wt == 0.0) continue;
    if (wt < 0.0) throw ValidationError("negative spectral weight");
    if (hg > 0.0) out.damped = true;
    const double c = wt * thermal_coth(w, thermal);
    for (std::size_t k = 0; k < n; ++k) {
      const double tau = tau_grid.time(k);
      const double env = hg > 0.0 ? std::exp(-hg * tau) : 1.0;
      out.D(k) += c * env * std::cos(w * tau);
      out.D1(k) -= wt * env * std::sin(w * tau);
    }
  }
  return out;
}

KernelSamples kernel(const SpectralDensity& spec, const ThermalParams& thermal, const TimeGrid& tau_grid) {
  return kernel(frequency_quadrature(spec), thermal, tau_grid);
}

KernelSamples kernel(std::span<const SpectralDensity> parts, const ThermalParams& thermal,
                     const TimeGrid& tau_grid) {
  return kernel(frequency_quadrature(parts), thermal, tau_grid);
}

cplx kernel_at(const Discretization& nodes, const ThermalParams& thermal, double tau) {
  double d = 0.0, d1 = 0.0;
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    const double w = nodes.omega[j];
    const double env = std::exp(-0.5 * nodes.gamma[j] * tau);
    d += nodes.weight[j] * thermal_coth(w, thermal) * env * std::cos(w * tau);
    d1 -= nodes.weight[j] * env * std::sin(w * tau);
  }
  return {d, d1};
}

std::optional<double> memory_time(const KernelSamples& k, double rel) {
  const std::size_t n = k.size();
  if (n == 0) return std::nullopt;
  const double a0 = std::abs(k.alpha(0));
  if (a0 == 0.0) return 0.0;
  const double thresh = rel * a0;
  std::size_t last_above = n;  // sentinel for "none above"
  for (std::size_t i = n; i-- > 0;) {
    if (std::abs(k.alpha(i)) >= thresh) {
      last_above = i;
      break;
    }
  }
  if (last_above + 1 >= n) return std::nullopt;
  return k.grid.time(last_above + 1);
}

KernelSamples truncated(const KernelSamples& k, double tau_b) {
  KernelSamples out = k;
  for (std::size_t i = 0; i < k.size(); ++i) {
    if (k.grid.time(i) > tau_b * (1.0 + 1e-12)) {
      out.D(i) = 0.0;
      out.D1(i) = 0.0;
    }
  }
  return out;
}

}  // namespace tiered
