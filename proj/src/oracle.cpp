#include "tiered/oracle.hpp"

#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <list>
#include <map>
#include <memory>
#include <sstream>
#include <string>

#include "tiered/errors.hpp"
#include "tiered/linalg.hpp"
#include "tiered/quadrature.hpp"
#include "tiered/rates.hpp"

namespace tiered {

using Triplet = Eigen::Triplet<cplx>;

namespace {

SparseMatrix speye(int n) {
  SparseMatrix m(n, n);
  m.setIdentity();
  return m;
}

SparseMatrix kron(const SparseMatrix& a, const SparseMatrix& b) {
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(a.nonZeros()) * b.nonZeros());
  for (int ka = 0; ka < a.outerSize(); ++ka) {
    for (SparseMatrix::InnerIterator ia(a, ka); ia; ++ia) {
      for (int kb = 0; kb < b.outerSize(); ++kb) {
        for (SparseMatrix::InnerIterator ib(b, kb); ib; ++ib) {
          t.emplace_back(ia.row() * b.rows() + ib.row(), ia.col() * b.cols() + ib.col(), ia.value() * ib.value());
        }
      }
    }
  }
  SparseMatrix r(a.rows() * b.rows(), a.cols() * b.cols());
  r.setFromTriplets(t.begin(), t.end());
  return r;
}

SparseMatrix to_sparse(const CMatrix& m) {
  SparseMatrix s = m.sparseView(1.0, 0.0);
  s.makeCompressed();
  return s;
}

SparseMatrix lowering(int levels) {
  SparseMatrix a(levels, levels);
  for (int n = 1; n < levels; ++n) a.insert(n - 1, n) = std::sqrt(static_cast<double>(n));
  a.makeCompressed();
  return a;
}

// D[L] on column-major vec: L* (x) L - (I (x) L^+L)/2 - ((L^+L)^T (x) I)/2
SparseMatrix dissipator(const SparseMatrix& l, double rate) {
  const int d = static_cast<int>(l.rows());
  const SparseMatrix id = speye(d);
  const SparseMatrix ldl = l.adjoint() * l;
  const SparseMatrix ldlt = ldl.transpose();
  return rate * (kron(SparseMatrix(l.conjugate()), l) - 0.5 * kron(id, ldl) - 0.5 * kron(ldlt, id));
}

// Nested dissection on the grid of Fock row/column indices.  Each mode adds
// two grid axes (row level, column level) and every cell holds ns*ns system
// entries.  Hamiltonian and dissipator terms only move each axis by one, so
// any hyperplane of cells separates the two halves of a box.
struct GridOrdering {
  static thread_local std::vector<int> levels;
  static thread_local int ns;

  template <typename MatrixType>
  void operator()(const MatrixType&, Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int>& perm) {
    const std::size_t k = levels.size();
    std::vector<int> lo(2 * k, 0), hi(2 * k);
    for (std::size_t i = 0; i < k; ++i) hi[i] = hi[k + i] = levels[i];
    std::vector<int> order;
    split(lo, hi, order);
    perm.resize(static_cast<int>(order.size()));
    for (int i = 0; i < static_cast<int>(order.size()); ++i) perm.indices()[order[i]] = i;
  }

  // cell coordinates: row levels of every mode, then column levels
  void push(const std::vector<int>& cell, std::vector<int>& o) const {
    const std::size_t k = levels.size();
    int fr = 0, fc = 0, fock = 1;
    for (std::size_t i = 0; i < k; ++i) {
      fr = fr * levels[i] + cell[i];
      fc = fc * levels[i] + cell[k + i];
      fock *= levels[i];
    }
    const int d = ns * fock;
    for (int s = 0; s < ns; ++s) {
      for (int sp = 0; sp < ns; ++sp) o.push_back((sp * fock + fc) * d + s * fock + fr);
    }
  }

  void push_box(const std::vector<int>& lo, const std::vector<int>& hi, std::vector<int>& o) const {
    std::vector<int> cell = lo;
    while (true) {
      push(cell, o);
      std::size_t a = cell.size();
      while (a > 0) {
        --a;
        if (++cell[a] < hi[a]) break;
        cell[a] = lo[a];
        if (a == 0) return;
      }
      if (cell == lo) return;
    }
  }

  void split(const std::vector<int>& lo, const std::vector<int>& hi, std::vector<int>& o) const {
    long volume = 1;
    std::size_t widest = 0;
    for (std::size_t a = 0; a < lo.size(); ++a) {
      if (hi[a] <= lo[a]) return;
      volume *= hi[a] - lo[a];
      if (hi[a] - lo[a] > hi[widest] - lo[widest]) widest = a;
    }
    if (volume <= 16 || hi[widest] - lo[widest] < 3) {
      push_box(lo, hi, o);
      return;
    }
    const int mid = (lo[widest] + hi[widest]) / 2;
    std::vector<int> h = hi, l = lo;
    h[widest] = mid;
    split(lo, h, o);
    l[widest] = mid + 1;
    split(l, hi, o);
    l[widest] = mid;
    h = hi;
    h[widest] = mid + 1;
    push_box(l, h, o);
  }
};

thread_local std::vector<int> GridOrdering::levels;
thread_local int GridOrdering::ns = 0;

class LuSolver {
 public:
  LuSolver(const SparseMatrix& a, const std::vector<int>& levels, int ns) {
    GridOrdering::levels = levels;
    GridOrdering::ns = ns;
    lu_.analyzePattern(a);
    lu_.factorize(a);
    if (lu_.info() != Eigen::Success) throw NumericalError("sparse LU factorization failed: " + lu_.lastErrorMessage());
  }

  CVector solve(const CVector& b) const {
    CVector x = lu_.solve(b);
    if (!x.allFinite()) throw NumericalError("sparse solve produced non-finite values");
    return x;
  }

 private:
  mutable Eigen::SparseLU<SparseMatrix, GridOrdering> lu_;
};

// x -> vec(X^+) for x = vec(X)
CVector hermitian_transpose(const CVector& x, int d) {
  CVector y(x.size());
  for (int c = 0; c < d; ++c) {
    for (int r = 0; r < d; ++r) y(static_cast<Eigen::Index>(c) * d + r) = std::conj(x(static_cast<Eigen::Index>(r) * d + c));
  }
  return y;
}

double factorial(int n) { return std::tgamma(n + 1.0); }

}  // namespace

cplx RationalExpansion::operator()(cplx z) const {
  cplx s = 0.0;
  for (std::size_t i = 0; i < poles.size(); ++i) s += residues[i] / (z - poles[i]);
  return s;
}

RationalExpansion pade34_expansion() {
  const int p = 3, q = 4;
  std::vector<double> num(p + 1), den(q + 1);
  for (int j = 0; j <= p; ++j) {
    num[j] = factorial(p + q - j) * factorial(p) / (factorial(p + q) * factorial(j) * factorial(p - j));
  }
  for (int j = 0; j <= q; ++j) {
    den[j] = factorial(p + q - j) * factorial(q) / (factorial(p + q) * factorial(j) * factorial(q - j)) *
             (j % 2 == 0 ? 1.0 : -1.0);
  }
  // companion matrix of the monic denominator
  CMatrix comp = CMatrix::Zero(q, q);
  for (int i = 1; i < q; ++i) comp(i, i - 1) = 1.0;
  for (int i = 0; i < q; ++i) comp(i, q - 1) = -den[i] / den[q];
  Eigen::ComplexEigenSolver<CMatrix> es(comp);
  RationalExpansion out;
  for (int i = 0; i < q; ++i) {
    cplx z = es.eigenvalues()(i);
    // polish the root
    for (int it = 0; it < 5; ++it) {
      cplx f = 0.0, df = 0.0;
      for (int j = q; j >= 0; --j) {
        df = df * z + f;
        f = f * z + den[j];
      }
      z -= f / df;
    }
    cplx pn = 0.0, dq = 0.0, qv = 0.0;
    for (int j = p; j >= 0; --j) pn = pn * z + num[j];
    for (int j = q; j >= 0; --j) {
      dq = dq * z + qv;
      qv = qv * z + den[j];
    }
    out.poles.push_back(z);
    out.residues.push_back(pn / dq);
  }
  return out;
}

double thermal_tail(double occupation, int n_fock) {
  if (occupation <= 0.0) return 0.0;
  return std::pow(occupation / (occupation + 1.0), n_fock);
}

int fock_truncation(const DampedMode& mode, const ThermalParams& thermal, double tol) {
  if (!(tol > 0.0) || tol >= 1.0) throw ValidationError("truncation tolerance must lie in (0, 1)");
  const double occ = thermal_occupation(mode.omega, thermal);
  if (occ <= 0.0) return 2;
  const double r = occ / (occ + 1.0);
  const int m = static_cast<int>(std::ceil(std::log(tol) / std::log(r)));
  return std::max(2, m + (thermal_tail(occ, m) < tol ? 0 : 1));
}

FockLindblad::FockLindblad(const SystemModel& model, const FockConfig& config, const ThermalParams& thermal)
    : model_(model), config_(config), thermal_(thermal) {
  model_.validate();
  if (config_.modes.empty()) throw ValidationError("the Fock oracle needs at least one mode");
  validate(discrete(config_.modes));
  if (!config_.n_fock.empty() && config_.n_fock.size() != config_.modes.size()) {
    throw ValidationError("n_fock needs one entry per mode");
  }
  if (!(config_.rtol > 0.0) || !(config_.atol > 0.0)) throw ValidationError("integrator tolerances must be positive");
  ns_ = model_.n();
  for (std::size_t k = 0; k < config_.modes.size(); ++k) {
    int m = config_.n_fock.empty() ? 0 : config_.n_fock[k];
    if (m == 0) m = fock_truncation(config_.modes[k], thermal_, config_.tail_tolerance);
    if (m < 2) throw ValidationError("n_fock must be at least 2");
    const double tail = thermal_tail(thermal_occupation(config_.modes[k].omega, thermal_), m);
    if (tail >= config_.tail_tolerance) {
      std::ostringstream os;
      os << "mode " << k << " truncated at " << m << " levels leaves thermal weight " << tail
         << " above the tolerance " << config_.tail_tolerance;
      warn(os.str());
    }
    levels_.push_back(m);
    fock_dim_ *= m;
  }
  dim_ = ns_ * fock_dim_;
  if (dim_ > 4000) {
    throw ConfigurationError("joint Hilbert dimension " + std::to_string(dim_) + " exceeds the oracle limit 4000");
  }

  const SparseMatrix id_f = speye(fock_dim_);
  const SparseMatrix id_s = speye(ns_);
  const SparseMatrix id = speye(dim_);
  const CMatrix vop = coupling_operator(std::span<const double>(model_.coupling.data(), model_.coupling.size()),
                                        *model_.basis);
  SparseMatrix bath_h(dim_, dim_), coupling(dim_, dim_), damping(static_cast<Eigen::Index>(dim_) * dim_,
                                                                 static_cast<Eigen::Index>(dim_) * dim_);
  const SparseMatrix v_joint = kron(to_sparse(vop), id_f);
  for (std::size_t k = 0; k < config_.modes.size(); ++k) {
    const DampedMode& mode = config_.modes[k];
    const SparseMatrix a = annihilation(k);
    const SparseMatrix ad = a.adjoint();
    bath_h += mode.omega * SparseMatrix(ad * a);
    coupling += mode.g * SparseMatrix(v_joint * SparseMatrix(a + ad));
    if (mode.gamma > 0.0) {
      const double occ = thermal_occupation(mode.omega, thermal_);
      damping += dissipator(a, mode.gamma * (occ + 1.0));
      if (occ > 0.0) damping += dissipator(ad, mode.gamma * occ);
    }
  }
  for (const HamiltonianSegment& seg : model_.schedule) {
    CMatrix hs = CMatrix::Zero(ns_, ns_);
    for (int i = 0; i < model_.basis->size(); ++i) hs += seg.coeffs(i) * model_.basis->nu(i);
    const SparseMatrix h = kron(to_sparse(hs), id_f) + bath_h + coupling;
    const SparseMatrix ht = h.transpose();
    SparseMatrix l = cplx(0.0, -1.0) * (kron(id, h) - kron(ht, id)) + damping;
    l.prune(cplx(0.0, 0.0));
    l.makeCompressed();
    liouvillians_.push_back(std::move(l));
  }
}

SparseMatrix FockLindblad::annihilation(std::size_t k) const {
  int before = 1, after = 1;
  for (std::size_t j = 0; j < levels_.size(); ++j) {
    if (j < k) before *= levels_[j];
    if (j > k) after *= levels_[j];
  }
  return kron(kron(kron(speye(ns_), speye(before)), lowering(levels_[k])), speye(after));
}

CVector FockLindblad::product_state(const CMatrix& rho_s, const std::vector<CMatrix>& mode_states) const {
  if (rho_s.rows() != ns_ || rho_s.cols() != ns_) throw ValidationError("system state has the wrong size");
  if (mode_states.size() != levels_.size()) throw ValidationError("need one state per mode");
  CMatrix joint = rho_s;
  for (std::size_t k = 0; k < levels_.size(); ++k) {
    if (mode_states[k].rows() != levels_[k] || mode_states[k].cols() != levels_[k]) {
      throw ValidationError("mode state " + std::to_string(k) + " has the wrong size");
    }
    CMatrix next(joint.rows() * levels_[k], joint.cols() * levels_[k]);
    for (Eigen::Index i = 0; i < joint.rows(); ++i) {
      for (Eigen::Index j = 0; j < joint.cols(); ++j) {
        next.block(i * levels_[k], j * levels_[k], levels_[k], levels_[k]) = joint(i, j) * mode_states[k];
      }
    }
    joint = std::move(next);
  }
  return Eigen::Map<const CVector>(joint.data(), joint.size());
}

CVector FockLindblad::thermal_product_state(const CMatrix& rho_s) const {
  std::vector<CMatrix> modes;
  for (std::size_t k = 0; k < levels_.size(); ++k) {
    const double occ = thermal_occupation(config_.modes[k].omega, thermal_);
    const double r = occ / (occ + 1.0);
    CMatrix m = CMatrix::Zero(levels_[k], levels_[k]);
    double z = 0.0;
    for (int n = 0; n < levels_[k]; ++n) {
      m(n, n) = std::pow(r, n);
      z += std::pow(r, n);
    }
    modes.push_back(m / z);
  }
  return product_state(rho_s, modes);
}

CMatrix FockLindblad::system_state(const CVector& v) const {
  CMatrix rho = CMatrix::Zero(ns_, ns_);
  const Eigen::Index d = dim_;
  for (int s = 0; s < ns_; ++s) {
    for (int sp = 0; sp < ns_; ++sp) {
      cplx acc = 0.0;
      for (int f = 0; f < fock_dim_; ++f) {
        const Eigen::Index row = static_cast<Eigen::Index>(s) * fock_dim_ + f;
        const Eigen::Index col = static_cast<Eigen::Index>(sp) * fock_dim_ + f;
        acc += v(col * d + row);
      }
      rho(s, sp) = acc;
    }
  }
  return rho;
}

CMatrix FockLindblad::mode_state(const CVector& v, std::size_t k) const {
  int stride = 1;
  for (std::size_t j = k + 1; j < levels_.size(); ++j) stride *= levels_[j];
  const int m_k = levels_[k];
  CMatrix rho = CMatrix::Zero(m_k, m_k);
  const Eigen::Index d = dim_;
  for (int s = 0; s < ns_; ++s) {
    for (int f = 0; f < fock_dim_; ++f) {
      const int n = (f / stride) % m_k;
      for (int m = 0; m < m_k; ++m) {
        const int fp = f + (m - n) * stride;
        const Eigen::Index row = static_cast<Eigen::Index>(s) * fock_dim_ + f;
        const Eigen::Index col = static_cast<Eigen::Index>(s) * fock_dim_ + fp;
        rho(n, m) += v(col * d + row);
      }
    }
  }
  return rho;
}

cplx FockLindblad::trace(const CVector& v) const {
  cplx t = 0.0;
  for (Eigen::Index i = 0; i < dim_; ++i) t += v(i * dim_ + i);
  return t;
}

cplx FockLindblad::expectation(const CVector& v, const SparseMatrix& op) const {
  cplx acc = 0.0;
  for (int k = 0; k < op.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(op, k); it; ++it) {
      acc += it.value() * v(static_cast<Eigen::Index>(it.row()) * dim_ + it.col());
    }
  }
  return acc;
}

std::vector<double> FockLindblad::breakpoints() const {
  std::vector<double> b;
  for (std::size_t i = 1; i < model_.schedule.size(); ++i) b.push_back(model_.schedule[i].start);
  return b;
}

std::size_t FockLindblad::segment_at(double t) const {
  std::size_t idx = 0;
  for (std::size_t i = 0; i < model_.schedule.size(); ++i) {
    if (t >= model_.schedule[i].start) idx = i;
  }
  return idx;
}

void FockLindblad::evolve_adaptive(CVector& y, double t0, double t1, const SparseMatrix& L, double& h) const {
  // Dormand-Prince 5(4)
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                          b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;
  (void)c2;
  (void)c3;
  (void)c4;
  (void)c5;

  double t = t0;
  const double span = t1 - t0;
  if (span <= 0.0) return;
  if (h <= 0.0) {
    const double ny = y.norm();
    const double nf = (L * y).norm();
    h = nf > 0.0 ? 0.01 * ny / nf : span;
  }
  CVector k1 = L * y, k2, k3, k4, k5, k6, k7, ytmp, ynew, err;
  std::size_t steps = 0, rejected = 0;
  while (t < t1) {
    if (config_.max_step > 0.0) h = std::min(h, config_.max_step);
    bool last = false;
    if (t + h >= t1 - 1e-12 * std::max(1.0, std::abs(t1))) {
      h = t1 - t;
      last = true;
    }
    ytmp = y + h * a21 * k1;
    k2 = L * ytmp;
    ytmp = y + h * (a31 * k1 + a32 * k2);
    k3 = L * ytmp;
    ytmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
    k4 = L * ytmp;
    ytmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    k5 = L * ytmp;
    ytmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    k6 = L * ytmp;
    ynew = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    k7 = L * ynew;
    err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      const double sc = config_.atol + config_.rtol * std::max(std::abs(y(i)), std::abs(ynew(i)));
      const double r = std::abs(err(i)) / sc;
      acc += r * r;
    }
    const double en = std::sqrt(acc / static_cast<double>(y.size()));
    if (!std::isfinite(en)) {
      std::ostringstream os;
      os << "oracle integrator produced non-finite values at t=" << t << " with step " << h;
      throw NumericalError(os.str());
    }
    const double factor = std::clamp(0.9 * std::pow(std::max(en, 1e-10), -0.2), 0.2, 5.0);
    if (en <= 1.0) {
      t = last ? t1 : t + h;
      y.swap(ynew);
      k1.swap(k7);
      h *= factor;
    } else {
      ++rejected;
      h *= std::min(1.0, factor);
    }
    if (++steps > config_.max_steps || h < 1e-14 * std::max(1.0, std::abs(t))) {
      std::ostringstream os;
      os << "oracle integrator failed at t=" << t << ": step " << h << ", error norm " << en << " after " << steps
         << " steps (" << rejected << " rejected)";
      throw NumericalError(os.str());
    }
  }
}

void FockLindblad::evolve(CVector state, const std::vector<double>& times, const Observer& observer) const {
  if (state.size() != static_cast<Eigen::Index>(dim_) * dim_) throw ValidationError("joint state has the wrong size");
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < 0.0 || (i > 0 && times[i] < times[i - 1])) {
      throw ValidationError("output times must be non-negative and ascending");
    }
  }
  const std::vector<double> bps = breakpoints();
  const RationalExpansion pade = pade34_expansion();

  struct Factored {
    std::size_t segment;
    long long key;
    double h;
    std::vector<std::pair<cplx, std::shared_ptr<LuSolver>>> terms;  // residue, solver
    std::vector<bool> pair;                                          // true: add the conjugate partner
  };
  std::list<Factored> cache;
  auto factored = [&](std::size_t seg, double h) -> const Factored& {
    const long long key = std::llround(h * 1e9);
    for (auto it = cache.begin(); it != cache.end(); ++it) {
      if (it->segment == seg && it->key == key) {
        cache.splice(cache.begin(), cache, it);
        return cache.front();
      }
    }
    if (cache.size() >= 2) cache.pop_back();
    Factored f{seg, key, h, {}, {}};
    const SparseMatrix& L = liouvillians_[seg];
    const SparseMatrix id = speye(static_cast<int>(L.rows()));
    for (std::size_t i = 0; i < pade.poles.size(); ++i) {
      const cplx p = pade.poles[i];
      const double tol = 1e-12 * std::abs(p);
      if (p.imag() < -tol) continue;  // handled through its partner
      SparseMatrix a = h * L - p * id;
      a.makeCompressed();
      f.terms.emplace_back(pade.residues[i], std::make_shared<LuSolver>(a, levels_, ns_));
      f.pair.push_back(p.imag() > tol);
    }
    cache.push_front(std::move(f));
    return cache.front();
  };

  double t = 0.0;
  double h_adapt = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double target = times[i];
    while (t < target) {
      double stop = target;
      for (double b : bps) {
        if (b > t && b < stop) stop = b;
      }
      const std::size_t seg = segment_at(t);
      const SparseMatrix& L = liouvillians_[seg];
      if (config_.integrator == OracleIntegrator::Adaptive) {
        evolve_adaptive(state, t, stop, L, h_adapt);
      } else {
        const double span = stop - t;
        std::size_t k = 1;
        if (config_.max_step > 0.0) k = static_cast<std::size_t>(std::ceil(span / config_.max_step - 1e-9));
        k = std::max<std::size_t>(k, 1);
        const Factored& f = factored(seg, span / static_cast<double>(k));
        for (std::size_t s = 0; s < k; ++s) {
          CVector next = CVector::Zero(state.size());
          for (std::size_t j = 0; j < f.terms.size(); ++j) {
            const CVector x = f.terms[j].first * f.terms[j].second->solve(state);
            if (f.pair[j]) {
              next += x + hermitian_transpose(x, dim_);
            } else {
              next += 0.5 * (x + hermitian_transpose(x, dim_));
            }
          }
          state.swap(next);
        }
      }
      t = stop;
    }
    observer(i, target, state);
  }
}

CVector FockLindblad::steady_state() const {
  if (liouvillians_.size() != 1) throw UnsupportedError("steady state needs a static Hamiltonian");
  const SparseMatrix& L = liouvillians_[0];
  const Eigen::Index n = L.rows();
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(L.nonZeros()) + dim_);
  for (int k = 0; k < L.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(L, k); it; ++it) {
      if (it.row() != 0) t.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
    }
  }
  for (Eigen::Index i = 0; i < dim_; ++i) t.emplace_back(0, static_cast<int>(i * dim_ + i), cplx(1.0, 0.0));
  SparseMatrix a(n, n);
  a.setFromTriplets(t.begin(), t.end());
  a.makeCompressed();
  const LuSolver lu(a, levels_, ns_);
  CVector b = CVector::Zero(n);
  b(0) = 1.0;
  CVector x = lu.solve(b);
  x = 0.5 * (x + hermitian_transpose(x, dim_));
  return x / trace(x);
}

OracleTrajectory lindblad_evolve(const SystemModel& model, const FockConfig& config, const ThermalParams& thermal,
                                 const CMatrix& rho0_system, const std::vector<double>& times) {
  const FockLindblad oracle(model, config, thermal);
  vectorize(rho0_system, *model.basis);  // validates the initial state
  OracleTrajectory out;
  out.levels = oracle.levels();
  out.times = times;
  oracle.evolve(oracle.thermal_product_state(rho0_system), times,
                [&](std::size_t, double, const CVector& state) {
                  const cplx tr = oracle.trace(state);
                  out.max_trace_error = std::max(out.max_trace_error, std::abs(tr - 1.0));
                  const CMatrix rho = oracle.system_state(state);
                  out.max_hermiticity_error = std::max(out.max_hermiticity_error, max_abs(rho - rho.adjoint()));
                  const CMatrix rn = 0.5 * (rho + rho.adjoint()) / tr.real();
                  out.rho.push_back(rn);
                  out.states.emplace_back(vectorize_operator(rn, *model.basis).real());
                });
  if (out.max_trace_error > 1e-8) {
    warn("oracle trace drifted by " + std::to_string(out.max_trace_error));
  }
  return out;
}

OracleTrajectory lindblad_evolve(const SystemModel& model, const FockConfig& config, const ThermalParams& thermal,
                                 const CMatrix& rho0_system, const TimeGrid& grid) {
  std::vector<double> times(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) times[k] = grid.time(k);
  return lindblad_evolve(model, config, thermal, rho0_system, times);
}

CMatrix lindblad_steady_state(const SystemModel& model, const FockConfig& config, const ThermalParams& thermal) {
  const FockLindblad oracle(model, config, thermal);
  const CMatrix rho = oracle.system_state(oracle.steady_state());
  return 0.5 * (rho + rho.adjoint());
}

ReducedTrajectory tcl2_reference(const SystemModel& model, const KernelSamples& kernel, const TimeGrid& grid,
                                 const PVector& rho0) {
  model.validate();
  if (!model.is_static()) throw UnsupportedError("the TCL2 reference needs a static Hamiltonian");
  if (kernel.damped) throw UnsupportedError("the TCL2 reference is defined for undamped baths only");
  const double hk = kernel.grid.dt;
  if (std::abs(2.0 * hk - grid.dt) > 1e-9 * grid.dt) {
    throw ConfigurationError("the TCL2 reference needs kernel samples at half the output spacing");
  }
  const std::size_t nk = 2 * grid.steps + 1;
  if (kernel.size() < nk) throw ConfigurationError("kernel grid is shorter than the TCL2 time range");

  const SuBasis& basis = *model.basis;
  const int n = basis.n();
  CMatrix h = CMatrix::Zero(n, n);
  for (int i = 0; i < basis.size(); ++i) h += model.schedule.front().coeffs(i) * basis.nu(i);
  const CMatrix v = coupling_operator(std::span<const double>(model.coupling.data(), model.coupling.size()), basis);

  // Lambda(t) = int_0^t alpha(s) e^{-iHs} V e^{iHs} ds on the kernel grid
  std::vector<CMatrix> lambda(nk, CMatrix::Zero(n, n));
  CMatrix prev = kernel.alpha(0) * v;
  const CMatrix step = unitary_exp(h, hk);
  CMatrix u = CMatrix::Identity(n, n);
  for (std::size_t m = 1; m < nk; ++m) {
    u = step * u;
    const CMatrix cur = kernel.alpha(m) * (u * v * u.adjoint());
    lambda[m] = lambda[m - 1] + 0.5 * hk * (prev + cur);
    prev = cur;
  }

  auto rhs = [&](const CMatrix& rho, const CMatrix& lam) {
    const CMatrix inner = lam * rho - rho * lam.adjoint();
    return CMatrix(-I * (h * rho - rho * h) - (v * inner - inner * v));
  };

  ReducedTrajectory out{grid, {}, 0.0};
  CMatrix rho = devectorize(rho0, basis);
  const double dt = grid.dt;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const CVector p = vectorize_operator(rho, basis);
    out.max_imag = std::max(out.max_imag, p.imag().cwiseAbs().maxCoeff());
    out.states.emplace_back(p.real());
    if (k + 1 == grid.size()) break;
    const CMatrix& l0 = lambda[2 * k];
    const CMatrix& l1 = lambda[2 * k + 1];
    const CMatrix& l2 = lambda[2 * k + 2];
    const CMatrix k1 = rhs(rho, l0);
    const CMatrix k2 = rhs(rho + 0.5 * dt * k1, l1);
    const CMatrix k3 = rhs(rho + 0.5 * dt * k2, l1);
    const CMatrix k4 = rhs(rho + dt * k3, l2);
    rho += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return out;
}

InfluenceMatrix tcl2_theta(const SystemModel& model, const KernelSamples& kernel, const TimeGrid& grid) {
  model.validate();
  if (!model.is_static()) throw UnsupportedError("the TCL2 reference needs a static Hamiltonian");
  if (std::abs(kernel.grid.dt - grid.dt) > 1e-12 * grid.dt) {
    throw ConfigurationError("kernel spacing differs from the time grid spacing");
  }
  if (kernel.size() < grid.size()) throw ConfigurationError("kernel grid is shorter than the time range");
  const SuBasis& basis = *model.basis;
  const int n = basis.n();
  CMatrix h = CMatrix::Zero(n, n);
  for (int i = 0; i < basis.size(); ++i) h += model.schedule.front().coeffs(i) * basis.nu(i);
  const CMatrix v = coupling_operator(std::span<const double>(model.coupling.data(), model.coupling.size()), basis);
  const double dt = grid.dt;
  const CMatrix step = unitary_exp(h, dt);

  InfluenceMatrix out{grid, {}};
  const int d = basis.dim();
  CMatrix lam = CMatrix::Zero(n, n);
  CMatrix u = CMatrix::Identity(n, n);  // e^{-iHt}
  CMatrix prev_term = kernel.alpha(0) * v;
  CMatrix acc = CMatrix::Zero(d, d);
  CMatrix prev_gen = CMatrix::Zero(d, d);
  out.theta.push_back(acc);
  for (std::size_t k = 1; k < grid.size(); ++k) {
    u = step * u;
    const CMatrix term = kernel.alpha(k) * (u * v * u.adjoint());
    lam += 0.5 * dt * (prev_term + term);
    prev_term = term;
    // interaction picture: U^-1 K U with U rho = u rho u^+
    const CMatrix gen = superoperator_matrix(basis, [&](const CMatrix& x) {
      const CMatrix y = u * x * u.adjoint();
      const CMatrix inner = lam * y - y * lam.adjoint();
      const CMatrix ky = -(v * inner - inner * v);
      return CMatrix(u.adjoint() * ky * u);
    });
    acc += 0.5 * dt * (prev_gen + gen);
    prev_gen = gen;
    out.theta.push_back(acc);
  }
  return out;
}

ReducedTrajectory wcme_evolve(double eps, double Delta, const SpectralDensity& spec, const ThermalParams& thermal,
                              const PVector& rho0, const TimeGrid& grid) {
  const RMatrix g = wcme_generator(eps, Delta, spec, thermal);
  const CMatrix step = expm(CMatrix(g.cast<cplx>() * grid.dt));
  ReducedTrajectory out{grid, {}, 0.0};
  CVector p = rho0.coeffs.cast<cplx>();
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (k > 0) p = step * p;
    RVector re = p.real();
    re(re.size() - 1) = rho0.trace_component();
    out.max_imag = std::max(out.max_imag, p.imag().cwiseAbs().maxCoeff());
    out.states.emplace_back(re);
  }
  return out;
}

}  // namespace tiered
