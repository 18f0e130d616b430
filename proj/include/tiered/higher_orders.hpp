#pragma once

#include <map>
#include <memory>
#include <vector>

#include "tiered/bath.hpp"
#include "tiered/influence.hpp"

namespace tiered {

// powers of alpha_k (a) and alpha_k^* (b) for each mode
struct MomentIndex {
  std::vector<int> a;
  std::vector<int> b;

  static MomentIndex zero(std::size_t modes) { return {std::vector<int>(modes, 0), std::vector<int>(modes, 0)}; }
  int degree() const;
};

struct MomentOptions {
  int max_order = 4;
  bool use_cache = true;
  // skip evaluation of entries whose parity forces them to vanish
  bool prune_parity = true;
};

// chi_n(a, b; t) on a uniform grid by memoized top-down recursion.  The mode
// couplings g_k are used as they are, so chi_2(0) is the full second-order
// influence matrix.
class MomentSolver {
 public:
  MomentSolver(const SystemModel& model, std::vector<DampedMode> modes, const ThermalParams& thermal,
               const TimeGrid& grid, MomentOptions options = {});

  std::vector<CMatrix> chi(int n, const MomentIndex& idx);
  std::size_t cache_size() const { return cache_.size(); }
  std::size_t evaluations() const { return evaluations_; }
  const TimeGrid& grid() const { return frames_.grid(); }

 private:
  struct Series {
    bool zero = true;
    std::vector<CMatrix> values;
  };
  using SeriesPtr = std::shared_ptr<const Series>;

  SeriesPtr eval(int n, const MomentIndex& idx);
  SeriesPtr compute(int n, const MomentIndex& idx);
  SeriesPtr base(const MomentIndex& idx) const;

  std::vector<DampedMode> modes_;
  std::vector<double> occupation_;
  InteractionFrames frames_;
  MomentOptions options_;
  int dim_;
  std::map<std::vector<int>, SeriesPtr> cache_;
  std::size_t evaluations_ = 0;
};

std::vector<CMatrix> chi(int n, const MomentIndex& idx, const std::vector<DampedMode>& modes,
                         const SystemModel& model, const ThermalParams& thermal, const TimeGrid& grid,
                         MomentOptions options = {});

// Theta_m from moments chi_m(0) at one time (chi[0] is the identity, unused):
// Theta = log(sum chi_m) collected order by order with same-time products
std::vector<CMatrix> assemble_cumulants(const std::vector<CMatrix>& chi_by_order);

struct ThetaSeries {
  TimeGrid grid;
  // theta[m][k] = Theta_m(t_k), m = 0..max_order (odd m identically zero)
  std::vector<std::vector<CMatrix>> theta;

  // Theta_2 + Theta_4 + ... up to the given order
  InfluenceMatrix total(int order) const;
};

ThetaSeries theta_series(const std::vector<DampedMode>& modes, const SystemModel& model,
                         const ThermalParams& thermal, const TimeGrid& grid, int max_order,
                         MomentOptions options = {});

}  // namespace tiered
