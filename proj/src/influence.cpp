#include "tiered/influence.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <string>

#include "tiered/errors.hpp"
#include "tiered/linalg.hpp"
#include "tiered/quadrature.hpp"

namespace tiered {

namespace {

// exp(-i H^x dt) built on the traceless block so the trace component stays exact
CMatrix segment_exponential(const RVector& h, const SuBasis& basis, double dt) {
  const int s = basis.size();
  const CMatrix hx = build_hcross(std::span<const double>(h.data(), h.size()), basis).matrix;
  CMatrix u = CMatrix::Identity(basis.dim(), basis.dim());
  if (dt != 0.0) u.topLeftCorner(s, s) = unitary_exp(hx.topLeftCorner(s, s), dt);
  return u;
}

double segment_end(const SystemModel& m, std::size_t i) {
  return i + 1 < m.schedule.size() ? m.schedule[i + 1].start : std::numeric_limits<double>::infinity();
}

// propagator from t0 to t1 (t1 >= t0)
CMatrix propagator_between(const SystemModel& model, double t0, double t1) {
  CMatrix u = CMatrix::Identity(model.basis->dim(), model.basis->dim());
  for (std::size_t i = 0; i < model.schedule.size(); ++i) {
    const double a = std::max(t0, model.schedule[i].start);
    const double b = std::min(t1, segment_end(model, i));
    if (b > a) u = segment_exponential(model.schedule[i].coeffs, *model.basis, b - a) * u;
  }
  return u;
}

// index of the segment containing [t0, t1], or -1 when a breakpoint falls inside
int containing_segment(const SystemModel& m, double t0, double t1) {
  for (std::size_t i = 0; i < m.schedule.size(); ++i) {
    if (t0 >= m.schedule[i].start && t1 <= segment_end(m, i)) return static_cast<int>(i);
  }
  return -1;
}

void zero_last_row(CMatrix& a) { a.row(a.rows() - 1).setZero(); }

}  // namespace

const RVector& SystemModel::hamiltonian_at(double t) const {
  std::size_t idx = 0;
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    if (t >= schedule[i].start) idx = i;
  }
  return schedule[idx].coeffs;
}

void SystemModel::validate() const {
  if (!basis) throw ValidationError("system model has no basis");
  if (schedule.empty()) throw ValidationError("hamiltonian schedule is empty");
  if (schedule.front().start != 0.0) throw ValidationError("hamiltonian schedule must start at t = 0");
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    if (schedule[i].coeffs.size() != basis->size()) {
      throw ValidationError("hamiltonian segment " + std::to_string(i) + " needs " +
                            std::to_string(basis->size()) + " coefficients");
    }
    if (!schedule[i].coeffs.allFinite()) throw ValidationError("hamiltonian coefficients must be finite");
    if (i > 0 && !(schedule[i].start > schedule[i - 1].start)) {
      throw ValidationError("hamiltonian breakpoints must be strictly ascending");
    }
  }
  if (coupling.size() != basis->dim()) {
    throw ValidationError("coupling needs " + std::to_string(basis->dim()) + " coefficients");
  }
  if (!coupling.allFinite()) throw ValidationError("coupling coefficients must be finite");
}

SystemModel SystemModel::make(int n, std::vector<HamiltonianSegment> schedule, RVector coupling) {
  SystemModel m{std::make_shared<const SuBasis>(n), std::move(schedule), std::move(coupling)};
  m.validate();
  return m;
}

SystemModel SystemModel::two_level(double eps, double Delta) {
  RVector h(3);
  h << 0.5 * Delta, 0.0, 0.5 * eps;
  RVector v(4);
  v << 0.0, 0.0, 1.0, 0.0;
  return make(2, {HamiltonianSegment{0.0, h}}, v);
}

CMatrix propagator(const SystemModel& model, double t) {
  if (t < 0.0) throw ValidationError("propagator needs t >= 0");
  return propagator_between(model, 0.0, t);
}

InteractionFrames::InteractionFrames(const SystemModel& model, const TimeGrid& grid) : grid_(grid) {
  model.validate();
  const std::size_t n = grid.size();
  const auto vx = build_vcross(std::span<const double>(model.coupling.data(), model.coupling.size()),
                               *model.basis).matrix;
  const auto vo = build_vcirc(std::span<const double>(model.coupling.data(), model.coupling.size()),
                              *model.basis).matrix;
  u_.reserve(n);
  vx_.reserve(n);
  vo_.reserve(n);
  std::map<int, CMatrix> step_cache;
  CMatrix u = CMatrix::Identity(model.basis->dim(), model.basis->dim());
  for (std::size_t k = 0; k < n; ++k) {
    if (k > 0) {
      const double t0 = grid.time(k - 1);
      const double t1 = grid.time(k);
      const int seg = containing_segment(model, t0, t1);
      if (seg >= 0) {
        auto it = step_cache.find(seg);
        if (it == step_cache.end()) {
          it = step_cache.emplace(seg, segment_exponential(model.schedule[seg].coeffs, *model.basis, grid.dt))
                   .first;
        }
        u = it->second * u;
      } else {
        u = propagator_between(model, t0, t1) * u;
      }
    }
    const CMatrix ud = u.adjoint();
    u_.push_back(u);
    vx_.push_back(ud * vx * u);
    vo_.push_back(ud * vo * u);
  }
}

InfluenceMatrix& InfluenceMatrix::operator+=(const InfluenceMatrix& other) {
  if (other.size() != size()) throw ConfigurationError("influence matrices live on different grids");
  for (std::size_t k = 0; k < size(); ++k) theta[k] += other.theta[k];
  return *this;
}

double fastest_frequency(const SystemModel& model) {
  double w = 0.0;
  for (const auto& seg : model.schedule) {
    const CMatrix hx =
        build_hcross(std::span<const double>(seg.coeffs.data(), seg.coeffs.size()), *model.basis).matrix;
    Eigen::SelfAdjointEigenSolver<CMatrix> es(hx);
    w = std::max(w, es.eigenvalues().cwiseAbs().maxCoeff());
  }
  return w;
}

std::optional<double> effective_memory_time(const KernelSamples& kernel, const ThetaOptions& options) {
  if (!options.truncate) return std::nullopt;
  if (options.memory_time) return *options.memory_time;
  return memory_time(kernel, options.memory_tolerance);
}

namespace {

// kernel truncated to the memory time, after checking it covers what is needed
KernelSamples prepared_kernel(const KernelSamples& kernel, const TimeGrid& grid, const ThetaOptions& options) {
  if (std::abs(kernel.grid.dt - grid.dt) > 1e-12 * grid.dt) {
    throw ConfigurationError("kernel spacing " + std::to_string(kernel.grid.dt) +
                             " differs from the time grid spacing " + std::to_string(grid.dt));
  }
  const std::optional<double> tau_b = effective_memory_time(kernel, options);
  double needed = grid.t_max();
  if (tau_b) needed = std::min(needed, *tau_b);
  if (kernel.grid.t_max() < needed * (1.0 - 1e-12)) {
    throw ConfigurationError("kernel grid ends at " + std::to_string(kernel.grid.t_max()) + " but lags up to " +
                             std::to_string(needed) + " are needed");
  }
  return tau_b ? truncated(kernel, *tau_b) : kernel;
}

void check_resolution(double fastest, double dt) {
  if (fastest > 0.0 && dt > 2.0 * std::numbers::pi / fastest / 20.0) {
    warn("time step " + std::to_string(dt) + " under-resolves the system frequency " + std::to_string(fastest));
  }
}

}  // namespace

InfluenceMatrix theta_quadrature(const SystemModel& model, const KernelSamples& kernel, const TimeGrid& grid,
                                 const ThetaOptions& options) {
  check_resolution(fastest_frequency(model), grid.dt);
  return theta_quadrature(InteractionFrames(model, grid), kernel, options);
}

InfluenceMatrix theta_quadrature(const InteractionFrames& frames, const KernelSamples& kernel,
                                 const ThetaOptions& options) {
  const TimeGrid& grid = frames.grid();
  const KernelSamples k = prepared_kernel(kernel, grid, options);
  const std::size_t n = grid.size();
  const Eigen::Index d = frames.vcross(0).rows();
  const Eigen::Index sz = d * d;
  const double h = grid.dt;

  // last lag with a nonzero kernel sample
  std::size_t max_lag = 0;
  for (std::size_t i = 0; i < k.size() && i < n; ++i) {
    if (k.D(i) != 0.0 || k.D1(i) != 0.0) max_lag = i;
  }

  std::vector<cplx> xs(n * sz), ys(n * sz);
  for (std::size_t l = 0; l < n; ++l) {
    std::copy(frames.vcross(l).data(), frames.vcross(l).data() + sz, xs.begin() + l * sz);
    std::copy(frames.vcirc(l).data(), frames.vcirc(l).data() + sz, ys.begin() + l * sz);
  }

  InfluenceMatrix out{grid, {}};
  out.theta.reserve(n);
  CMatrix acc_theta = CMatrix::Zero(d, d);
  CMatrix f_prev = CMatrix::Zero(d, d);
  CMatrix inner(d, d);
  out.theta.push_back(CMatrix::Zero(d, d));
  for (std::size_t j = 1; j < n; ++j) {
    // inner(t_j) = int_0^{t_j} dt'' [D(t_j - t'') X(t'') + i D1(t_j - t'') Y(t'')]
    inner.setZero();
    cplx* acc = inner.data();
    const std::size_t l0 = j > max_lag ? j - max_lag : 0;
    for (std::size_t l = l0; l <= j; ++l) {
      const std::size_t lag = j - l;
      double w = h;
      if (l == 0 || l == j) w *= 0.5;
      const double a = w * k.D(lag);
      const double b = w * k.D1(lag);
      const cplx* x = xs.data() + l * sz;
      const cplx* y = ys.data() + l * sz;
      for (Eigen::Index e = 0; e < sz; ++e) acc[e] += a * x[e] + cplx(-b * y[e].imag(), b * y[e].real());
    }
    const CMatrix f = frames.vcross(j) * inner;
    acc_theta.noalias() -= 0.5 * h * (f_prev + f);
    f_prev = f;
    CMatrix th = acc_theta;
    zero_last_row(th);
    out.theta.push_back(std::move(th));
  }
  return out;
}

InfluenceMatrix SpinBosonTheta::sum() const {
  InfluenceMatrix out{grid, {}};
  out.theta.reserve(relax.size());
  for (std::size_t k = 0; k < relax.size(); ++k) {
    out.theta.push_back(relax[k] + lamb_shift[k] + thermal[k] + rotating_wave[k]);
  }
  return out;
}

SpinBosonTheta theta_spinboson(const SystemModel& model, const KernelSamples& kernel, const TimeGrid& grid,
                               const ThetaOptions& options) {
  model.validate();
  if (model.n() != 2 || !model.is_static()) {
    throw UnsupportedError("closed-form spin-boson influence needs a static two-level system");
  }
  const RVector& hc = model.schedule.front().coeffs;
  if (std::abs(hc(1)) > 1e-14 || std::abs(hc(2)) > 1e-14) {
    throw UnsupportedError("closed-form spin-boson influence needs zero bias (eps = 0); use theta_quadrature");
  }
  RVector vz(4);
  vz << 0.0, 0.0, 1.0, 0.0;
  if ((model.coupling - vz).cwiseAbs().maxCoeff() > 1e-14) {
    throw UnsupportedError("closed-form spin-boson influence needs V = sigma_z");
  }
  const double Delta = 2.0 * hc(0);
  const KernelSamples k = prepared_kernel(kernel, grid, options);
  const std::size_t n = grid.size();
  const double h = grid.dt;

  RVector dc(n), ds(n), tdc(n), tds(n), d1s(n), td1s(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double tau = grid.time(i);
    const double D = i < k.size() ? k.D(i) : 0.0;
    const double D1 = i < k.size() ? k.D1(i) : 0.0;
    const double c = std::cos(Delta * tau), s = std::sin(Delta * tau);
    dc(i) = D * c;
    ds(i) = D * s;
    d1s(i) = D1 * s;
    tdc(i) = tau * dc(i);
    tds(i) = tau * ds(i);
    td1s(i) = tau * d1s(i);
  }
  // trapezoid of (t - tau) f(tau) equals t * trap(f) - trap(tau f) node by node
  const RVector Adc = cumulative_trapezoid(dc, h), Btdc = cumulative_trapezoid(tdc, h);
  const RVector Ads = cumulative_trapezoid(ds, h), Btds = cumulative_trapezoid(tds, h);
  const RVector Ad1s = cumulative_trapezoid(d1s, h), Btd1s = cumulative_trapezoid(td1s, h);
  RVector dplain(n);
  for (std::size_t i = 0; i < n; ++i) dplain(i) = i < k.size() ? k.D(i) : 0.0;
  const RVector Ad = cumulative_trapezoid(dplain, h);
  RVector tdp(n);
  for (std::size_t i = 0; i < n; ++i) tdp(i) = grid.time(i) * dplain(i);
  const RVector Btd = cumulative_trapezoid(tdp, h);

  SpinBosonTheta out;
  out.grid = grid;
  out.relax_exponent.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = grid.time(i);
    const double ic = t * Adc(i) - Btdc(i);
    const double is = t * Ads(i) - Btds(i);
    const double i1 = t * Ad1s(i) - Btd1s(i);
    // int D(tau) sin(Delta (t - tau)) / Delta
    double irw;
    if (std::abs(Delta) < 1e-12) {
      irw = t * Ad(i) - Btd(i);
    } else {
      irw = (std::sin(Delta * t) * Adc(i) - std::cos(Delta * t) * Ads(i)) / Delta;
    }
    out.relax_exponent(i) = -2.0 * ic;

    CMatrix r = CMatrix::Zero(4, 4);
    r(0, 0) = 2.0;
    r(1, 1) = 1.0;
    r(2, 2) = 1.0;
    out.relax.push_back(-2.0 * ic * r);

    CMatrix ls = CMatrix::Zero(4, 4);
    ls(1, 2) = 1.0;
    ls(2, 1) = -1.0;
    out.lamb_shift.push_back(-2.0 * is * ls);

    CMatrix th = CMatrix::Zero(4, 4);
    th(0, 3) = 1.0;
    out.thermal.push_back(4.0 * i1 * th);

    CMatrix rw = CMatrix::Zero(4, 4);
    const double c = std::cos(Delta * t), s = std::sin(Delta * t);
    rw(1, 1) = c;
    rw(1, 2) = -s;
    rw(2, 1) = -s;
    rw(2, 2) = -c;
    out.rotating_wave.push_back(-2.0 * irw * rw);
  }
  return out;
}

ReducedTrajectory evolve(const SystemModel& model, const InfluenceMatrix& theta, const PVector& rho0) {
  model.validate();
  const int d = model.basis->dim();
  if (rho0.coeffs.size() != d) throw ValidationError("initial state has the wrong length");
  if (std::abs(rho0.trace_component() - 1.0 / model.n()) > 1e-12) {
    throw ValidationError("initial state trace component must be 1/n");
  }
  ReducedTrajectory out{theta.grid, {}, 0.0};
  out.states.reserve(theta.size());
  const InteractionFrames frames(model, theta.grid);
  const CVector p0 = rho0.coeffs.cast<cplx>();
  for (std::size_t k = 0; k < theta.size(); ++k) {
    CMatrix e = expm(theta.theta[k]);
    // the exponential of a matrix with zero last row keeps e_last^T there exactly
    e.row(d - 1).setZero();
    e(d - 1, d - 1) = 1.0;
    const CVector p = frames.U(k) * (e * p0);
    out.max_imag = std::max(out.max_imag, p.imag().cwiseAbs().maxCoeff());
    RVector re = p.real();
    re(d - 1) = rho0.trace_component();
    out.states.emplace_back(re);
  }
  return out;
}

namespace {

struct MomentPair {
  double zeroth;
  double first;
};

MomentPair moments(const KernelSamples& k, std::size_t upto, const std::function<double(std::size_t)>& f) {
  const double h = k.grid.dt;
  double z = 0.0, m = 0.0;
  for (std::size_t i = 0; i <= upto; ++i) {
    const double w = (i == 0 || i == upto) ? 0.5 * h : h;
    const double v = f(i);
    z += w * v;
    m += w * k.grid.time(i) * v;
  }
  return {z, m};
}

std::size_t decayed_extent(const KernelSamples& k, double rel) {
  const std::optional<double> tb = memory_time(k, rel);
  if (!tb) {
    throw DegenerateKernelError("kernel has not decayed below " + std::to_string(rel) +
                                " of its initial value within the grid; moments would grow with the grid");
  }
  return static_cast<std::size_t>(std::llround(*tb / k.grid.dt));
}

}  // namespace

ReorganizationTimes reorg_times(const KernelSamples& k, double Delta, double rel) {
  const std::size_t upto = decayed_extent(k, rel);
  const auto c = moments(k, upto, [&](std::size_t i) { return k.D(i) * std::cos(Delta * k.grid.time(i)); });
  const auto s = moments(k, upto, [&](std::size_t i) { return k.D(i) * std::sin(Delta * k.grid.time(i)); });
  const auto s1 = moments(k, upto, [&](std::size_t i) { return k.D1(i) * std::sin(Delta * k.grid.time(i)); });
  auto ratio = [](const MomentPair& p, const char* name) {
    if (std::abs(p.zeroth) < 1e-12) {
      throw DegenerateKernelError(std::string("zeroth moment of the ") + name + " kernel vanishes");
    }
    return p.first / p.zeroth;
  };
  return {ratio(c, "relaxation"), ratio(s, "lamb-shift"), ratio(s1, "thermal")};
}

PVector steady_state_spinboson(const KernelSamples& k, double Delta, double rel) {
  const std::size_t upto = decayed_extent(k, rel);
  const auto c = moments(k, upto, [&](std::size_t i) { return k.D(i) * std::cos(Delta * k.grid.time(i)); });
  const auto s1 = moments(k, upto, [&](std::size_t i) { return k.D1(i) * std::sin(Delta * k.grid.time(i)); });
  if (std::abs(c.zeroth) < 1e-12) throw DegenerateKernelError("zeroth moment of the relaxation kernel vanishes");
  RVector p(4);
  p << 0.5 * s1.zeroth / c.zeroth, 0.0, 0.0, 0.5;
  return PVector(p);
}

}  // namespace tiered
