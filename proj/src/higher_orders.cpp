#include "tiered/higher_orders.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "tiered/errors.hpp"

namespace tiered {

int MomentIndex::degree() const {
  return std::accumulate(a.begin(), a.end(), 0) + std::accumulate(b.begin(), b.end(), 0);
}

MomentSolver::MomentSolver(const SystemModel& model, std::vector<DampedMode> modes, const ThermalParams& thermal,
                           const TimeGrid& grid, MomentOptions options)
    : modes_(std::move(modes)), frames_(model, grid), options_(options), dim_(model.basis->dim()) {
  if (modes_.empty()) throw ValidationError("moment recursion needs at least one mode");
  validate(discrete(modes_));
  for (const DampedMode& m : modes_) occupation_.push_back(thermal_occupation(m.omega, thermal));
}

std::vector<CMatrix> MomentSolver::chi(int n, const MomentIndex& idx) {
  if (n < 0) throw ValidationError("moment order must be non-negative");
  if (n > options_.max_order) {
    throw CapabilityError("moment order " + std::to_string(n) + " exceeds the configured maximum " +
                          std::to_string(options_.max_order));
  }
  if (idx.a.size() != modes_.size() || idx.b.size() != modes_.size()) {
    throw ValidationError("moment index needs one entry per mode");
  }
  for (std::size_t k = 0; k < modes_.size(); ++k) {
    if (idx.a[k] < 0 || idx.b[k] < 0) throw ValidationError("moment index entries must be non-negative");
  }
  const SeriesPtr s = eval(n, idx);
  if (!s->zero) return s->values;
  return std::vector<CMatrix>(grid().size(), CMatrix::Zero(dim_, dim_));
}

MomentSolver::SeriesPtr MomentSolver::eval(int n, const MomentIndex& idx) {
  if (!options_.use_cache) return compute(n, idx);
  std::vector<int> key;
  key.reserve(1 + 2 * modes_.size());
  key.push_back(n);
  key.insert(key.end(), idx.a.begin(), idx.a.end());
  key.insert(key.end(), idx.b.begin(), idx.b.end());
  auto it = cache_.find(key);
  if (it != cache_.end()) return it->second;
  SeriesPtr s = compute(n, idx);
  cache_.emplace(std::move(key), s);
  return s;
}

MomentSolver::SeriesPtr MomentSolver::base(const MomentIndex& idx) const {
  auto out = std::make_shared<Series>();
  if (idx.a != idx.b) return out;
  double v = 1.0;
  for (std::size_t k = 0; k < modes_.size(); ++k) {
    v *= std::tgamma(idx.a[k] + 1.0) * std::pow(occupation_[k], idx.a[k]);
  }
  out->zero = false;
  out->values.assign(grid().size(), v * CMatrix::Identity(dim_, dim_));
  return out;
}

MomentSolver::SeriesPtr MomentSolver::compute(int n, const MomentIndex& idx) {
  ++evaluations_;
  if (n == 0) return base(idx);
  auto out = std::make_shared<Series>();
  if (options_.prune_parity && (n + idx.degree()) % 2 != 0) return out;

  const std::size_t nt = grid().size();
  const double h = grid().dt;
  const std::size_t m = modes_.size();

  cplx c = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    c += I * modes_[k].omega * static_cast<double>(idx.a[k] - idx.b[k]) +
         0.5 * modes_[k].gamma * static_cast<double>(idx.a[k] + idx.b[k]);
  }

  std::vector<CMatrix> scalar_part(nt, CMatrix::Zero(dim_, dim_));
  std::vector<CMatrix> cross_part(nt, CMatrix::Zero(dim_, dim_));
  std::vector<CMatrix> circ_part(nt, CMatrix::Zero(dim_, dim_));
  bool any_scalar = false, any_cross = false, any_circ = false;

  auto shifted = [&](int da_k, int db_k, std::size_t k) {
    MomentIndex j = idx;
    j.a[k] += da_k;
    j.b[k] += db_k;
    return j;
  };
  auto accumulate = [&](std::vector<CMatrix>& dst, const SeriesPtr& src, cplx coef, bool& flag) {
    if (src->zero || coef == 0.0) return;
    flag = true;
    for (std::size_t t = 0; t < nt; ++t) dst[t] += coef * src->values[t];
  };

  for (std::size_t k = 0; k < m; ++k) {
    const double ak = idx.a[k], bk = idx.b[k];
    const double g = modes_[k].g;
    const double gn = modes_[k].gamma * occupation_[k];
    if (ak > 0 && bk > 0 && gn != 0.0) {
      accumulate(scalar_part, eval(n, shifted(-1, -1, k)), gn * ak * bk, any_scalar);
    }
    if (g == 0.0) continue;
    accumulate(cross_part, eval(n - 1, shifted(1, 0, k)), g, any_cross);
    accumulate(cross_part, eval(n - 1, shifted(0, 1, k)), g, any_cross);
    if (ak > 0) {
      const SeriesPtr lo = eval(n - 1, shifted(-1, 0, k));
      accumulate(cross_part, lo, 0.5 * g * ak, any_cross);
      accumulate(circ_part, lo, g * ak, any_circ);
    }
    if (bk > 0) {
      const SeriesPtr lo = eval(n - 1, shifted(0, -1, k));
      accumulate(cross_part, lo, 0.5 * g * bk, any_cross);
      accumulate(circ_part, lo, -g * bk, any_circ);
    }
  }
  if (!any_scalar && !any_cross && !any_circ) return out;

  std::vector<CMatrix> s(nt);
  for (std::size_t t = 0; t < nt; ++t) {
    s[t] = scalar_part[t];
    if (any_cross) s[t] -= I * (frames_.vcross(t) * cross_part[t]);
    if (any_circ) s[t] -= 0.5 * I * (frames_.vcirc(t) * circ_part[t]);
  }

  // chi(t_{k+1}) = e^{-c h} (chi(t_k) + h/2 S_k) + h/2 S_{k+1}
  const cplx decay = std::exp(-c * h);
  out->zero = false;
  out->values.resize(nt);
  out->values[0] = CMatrix::Zero(dim_, dim_);
  for (std::size_t t = 0; t + 1 < nt; ++t) {
    out->values[t + 1] = decay * (out->values[t] + 0.5 * h * s[t]) + 0.5 * h * s[t + 1];
  }
  return out;
}

std::vector<CMatrix> chi(int n, const MomentIndex& idx, const std::vector<DampedMode>& modes,
                         const SystemModel& model, const ThermalParams& thermal, const TimeGrid& grid,
                         MomentOptions options) {
  MomentSolver solver(model, modes, thermal, grid, options);
  return solver.chi(n, idx);
}

std::vector<CMatrix> assemble_cumulants(const std::vector<CMatrix>& chi_by_order) {
  const std::size_t top = chi_by_order.size();
  if (top == 0) return {};
  const Eigen::Index d = chi_by_order[0].rows();
  std::vector<CMatrix> theta(top, CMatrix::Zero(d, d));
  // prod[j][m]: sum over ordered compositions of m into j positive parts of
  // the products Theta_{p1} ... Theta_{pj}
  std::vector<std::vector<CMatrix>> prod(top, std::vector<CMatrix>(top, CMatrix::Zero(d, d)));
  for (std::size_t m = 1; m < top; ++m) {
    CMatrix t = chi_by_order[m];
    double fact = 1.0;
    for (std::size_t j = 2; j <= m; ++j) {
      fact *= static_cast<double>(j);
      CMatrix acc = CMatrix::Zero(d, d);
      for (std::size_t p = 1; p + (j - 1) <= m; ++p) acc += theta[p] * prod[j - 1][m - p];
      prod[j][m] = acc;
      t -= acc / fact;
    }
    theta[m] = t;
    prod[1][m] = t;
  }
  return theta;
}

InfluenceMatrix ThetaSeries::total(int order) const {
  InfluenceMatrix out{grid, {}};
  const std::size_t nt = grid.size();
  const Eigen::Index d = theta.at(0).at(0).rows();
  out.theta.assign(nt, CMatrix::Zero(d, d));
  for (int m = 1; m <= order && m < static_cast<int>(theta.size()); ++m) {
    for (std::size_t k = 0; k < nt; ++k) out.theta[k] += theta[m][k];
  }
  return out;
}

ThetaSeries theta_series(const std::vector<DampedMode>& modes, const SystemModel& model,
                         const ThermalParams& thermal, const TimeGrid& grid, int max_order,
                         MomentOptions options) {
  if (max_order < 2 || max_order % 2 != 0) {
    throw ValidationError("series order must be even and at least 2, got " + std::to_string(max_order));
  }
  if (max_order > options.max_order) {
    throw CapabilityError("series order " + std::to_string(max_order) + " exceeds the configured maximum " +
                          std::to_string(options.max_order));
  }
  MomentSolver solver(model, modes, thermal, grid, options);
  const MomentIndex zero = MomentIndex::zero(modes.size());
  const int d = model.basis->dim();
  std::vector<std::vector<CMatrix>> chis(max_order + 1);
  chis[0].assign(grid.size(), CMatrix::Identity(d, d));
  for (int m = 1; m <= max_order; ++m) chis[m] = solver.chi(m, zero);

  ThetaSeries out{grid, std::vector<std::vector<CMatrix>>(max_order + 1)};
  for (std::size_t k = 0; k < grid.size(); ++k) {
    std::vector<CMatrix> at(max_order + 1);
    for (int m = 0; m <= max_order; ++m) at[m] = chis[m][k];
    std::vector<CMatrix> th = assemble_cumulants(at);
    for (int m = 0; m <= max_order; ++m) {
      if (m == 0) th[0].setZero();
      // trace preservation holds order by order
      th[m].row(d - 1).setZero();
      out.theta[m].push_back(std::move(th[m]));
    }
  }
  return out;
}

}  // namespace tiered
