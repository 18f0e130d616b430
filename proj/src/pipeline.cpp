#include "tiered/pipeline.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <mutex>

#include "tiered/errors.hpp"
#include "tiered/higher_orders.hpp"
#include "tiered/linalg.hpp"

namespace tiered {

namespace {

using nlohmann::json;

// collects warnings for the summary while still printing them
class WarningCollector {
 public:
  WarningCollector() {
    previous_ = set_warning_handler([this](std::string_view m) {
      std::lock_guard<std::mutex> lock(mutex_);
      if (std::find(messages_.begin(), messages_.end(), m) == messages_.end()) messages_.emplace_back(m);
      if (previous_) {
        previous_(m);
      } else {
        std::cerr << "warning: " << m << '\n';
      }
    });
  }
  ~WarningCollector() { set_warning_handler(previous_); }
  WarningCollector(const WarningCollector&) = delete;
  WarningCollector& operator=(const WarningCollector&) = delete;

  std::vector<std::string> messages() {
    std::lock_guard<std::mutex> lock(mutex_);
    return messages_;
  }

 private:
  WarningHandler previous_;
  std::mutex mutex_;
  std::vector<std::string> messages_;
};

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

bool spinboson_form(const Scenario& s) {
  if (!s.is_two_level() || *s.epsilon != 0.0) return false;
  RVector vz = RVector::Zero(4);
  vz(2) = 1.0;
  return s.coupling == vz;
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError(path.string() + ": cannot open for writing");
  out << j.dump(2) << '\n';
}

ThetaOptions theta_options(const InfluenceSettings& inf) {
  ThetaOptions o;
  o.memory_time = inf.memory_time;
  o.memory_tolerance = inf.memory_tolerance;
  o.truncate = inf.truncate;
  return o;
}

struct InfluenceRun {
  InfluenceMatrix theta;
  std::optional<SpinBosonTheta> closed;
};

InfluenceRun influence_theta(const Scenario& s, const SystemModel& model, const KernelSamples& k,
                             const TimeGrid& grid, const ThetaOptions& opts) {
  if (s.influence.closed_form) {
    if (!spinboson_form(s)) {
      throw ValidationError(
          "methods.influence.closed_form needs a two_level system with epsilon = 0 and the default sigma_z "
          "coupling; set closed_form: false to use quadrature");
    }
    SpinBosonTheta sb = theta_spinboson(model, k, grid, opts);
    InfluenceMatrix sum = sb.sum();
    return {std::move(sum), std::move(sb)};
  }
  return {theta_quadrature(model, k, grid, opts), std::nullopt};
}

std::string part_name(const SpectralDensity& p, std::size_t continuous_index) {
  return p.is_discrete() ? "modes" : "continuous" + std::to_string(continuous_index);
}

}  // namespace

std::vector<std::string> observable_columns(int n) {
  if (n == 2) return {"sx", "sy", "sz"};
  std::vector<std::string> out;
  for (int i = 1; i < n * n; ++i) out.push_back("nu" + std::to_string(i));
  return out;
}

Table trajectory_table(const ReducedTrajectory& traj, std::size_t stride) {
  if (stride == 0) throw ValidationError("stride must be positive");
  Table t;
  const int n = traj.states.front().n();
  t.columns.push_back("t");
  for (const std::string& c : observable_columns(n)) t.columns.push_back(c);
  for (std::size_t k = 0; k < traj.states.size(); k += stride) {
    std::vector<double> row{traj.grid.time(k)};
    for (int i = 0; i < n * n - 1; ++i) row.push_back(traj.expectation(k, i));
    t.rows.push_back(std::move(row));
  }
  return t;
}

json to_json(const RateReport& r) {
  return {{"omega_rabi", r.omega_rabi},
          {"gamma_relax", r.gamma_relax},
          {"gamma_dephase", r.gamma_dephase},
          {"relax_time", number_or_null(1.0 / r.gamma_relax)},
          {"dephase_time", number_or_null(1.0 / r.gamma_dephase)},
          {"lamb_shift", r.lamb_shift},
          {"steady_sigma_z_tilde", number_or_null(r.steady_sigma_z_tilde)},
          {"t_eff", number_or_null(r.t_eff)},
          {"thermalizes", r.thermalizes}};
}

json rates_summary(const Scenario& s) {
  json out;
  out["rates"] = nullptr;
  out["wcme_rates"] = nullptr;
  out["reorganization_times"] = nullptr;
  out["steady_state"] = nullptr;
  if (!s.is_two_level()) return out;
  const double eps = *s.epsilon, Delta = *s.delta;
  const std::vector<SpectralDensity> parts = s.bath_parts();
  RateReport r;
  if (s.modes.size() == 1 && s.continuous.empty()) {
    r = rabi_rates(eps, Delta, s.modes.front(), s.thermal);
    out["rates"] = to_json(r);
    out["rates"]["model"] = "single_mode";
  } else {
    r = multimode_rates(eps, Delta, parts, s.thermal);
    out["rates"] = to_json(r);
    out["rates"]["model"] = "multimode";
  }
  if (s.modes.empty() && s.continuous.size() == 1) {
    bool undamped = true;
    if (const auto* o = std::get_if<OhmicFamily>(&s.continuous[0].kind)) undamped = o->gamma.is_zero();
    if (const auto* t = std::get_if<Tabulated>(&s.continuous[0].kind)) {
      for (double g : t->gamma) undamped = undamped && g == 0.0;
    }
    if (undamped) out["wcme_rates"] = to_json(wcme_rates(eps, Delta, s.continuous[0], s.thermal));
  }
  json steady = {{"sigma_z_tilde", number_or_null(r.steady_sigma_z_tilde)}, {"t_eff", number_or_null(r.t_eff)}};
  if (spinboson_form(s)) {
    const KernelSamples k = kernel(parts, s.thermal, s.grid());
    try {
      const ReorganizationTimes rt = reorg_times(k, Delta, s.influence.memory_tolerance);
      out["reorganization_times"] = {{"relax", rt.relax}, {"lamb_shift", rt.lamb_shift}, {"thermal", rt.thermal}};
      const PVector p = steady_state_spinboson(k, Delta, s.influence.memory_tolerance);
      steady["closed_form_pvector"] = std::vector<double>(p.coeffs.data(), p.coeffs.data() + p.coeffs.size());
    } catch (const DegenerateKernelError& e) {
      warn(std::string("no reorganization times: ") + e.what());
    }
  }
  out["steady_state"] = steady;
  return out;
}

RunResult run_scenario(const Scenario& s, const RunOptions& options) {
  WarningCollector warnings;
  RunResult res;
  res.dir = options.out ? *options.out : std::filesystem::path(s.output_path);
  std::filesystem::create_directories(res.dir);

  HigherOrderSettings higher = s.higher_order;
  if (options.order) {
    if (*options.order != 2 && *options.order != 4) throw ValidationError("--order must be 2 or 4");
    higher.enabled = *options.order == 4;
    higher.order = *options.order;
  }
  const bool do_influence = !options.oracle_only && s.influence.enabled;
  const bool do_higher = !options.oracle_only && higher.enabled;
  const bool do_wcme = !options.oracle_only && s.wcme;
  const bool do_tcl2 = !options.oracle_only && s.tcl2;
  const bool do_oracle = options.oracle_only || s.oracle.enabled;
  if (!do_influence && !do_higher && !do_wcme && !do_tcl2 && !do_oracle) {
    throw ValidationError(s.source + ": methods: nothing to run");
  }

  const SystemModel model = s.model();
  const TimeGrid grid = s.grid();
  const std::vector<SpectralDensity> parts = s.bath_parts();
  const std::size_t stride = s.output_every;
  json checks = json::object();
  json methods = json::object();

  auto emit = [&](const std::string& name, const Table& t) {
    const std::string file = name + ".csv";
    write_csv(res.dir / file, t);
    res.files.push_back(file);
  };

  if (do_influence) {
    const ThetaOptions opts = theta_options(s.influence);
    const KernelSamples k = kernel(parts, s.thermal, grid);
    InfluenceRun inf = influence_theta(s, model, k, grid, opts);
    const ReducedTrajectory traj = evolve(model, inf.theta, s.rho0);
    emit("influence", trajectory_table(traj, stride));
    const std::optional<double> tau_b = effective_memory_time(k, opts);
    methods["influence"] = {{"memory_time", tau_b ? json(*tau_b) : json(nullptr)},
                            {"max_imag", traj.max_imag},
                            {"closed_form", s.influence.closed_form}};

    // relaxation envelope 1/2 + 1/2 exp(theta_relax)
    if (spinboson_form(s)) {
      const SpinBosonTheta sb = inf.closed ? *inf.closed : theta_spinboson(model, k, grid, opts);
      Table env{{"t", "theta_relax", "envelope"}, {}};
      for (std::size_t i = 0; i < grid.size(); i += stride) {
        const double th = sb.relax_exponent(static_cast<Eigen::Index>(i));
        env.rows.push_back({grid.time(i), th, 0.5 + 0.5 * std::exp(th)});
      }
      emit("envelope", env);
    }

    if (s.influence.components && parts.size() > 1) {
      // every part shares the combined memory cut so the sum is exact
      ThetaOptions part_opts;
      part_opts.truncate = tau_b.has_value();
      part_opts.memory_time = tau_b;
      InfluenceMatrix total{grid, std::vector<CMatrix>(grid.size(), CMatrix::Zero(inf.theta.theta[0].rows(),
                                                                                   inf.theta.theta[0].cols()))};
      std::size_t ci = 0;
      for (const SpectralDensity& p : parts) {
        const KernelSamples kp = kernel(p, s.thermal, grid);
        const InfluenceRun ip = influence_theta(s, model, kp, grid, part_opts);
        total += ip.theta;
        emit("influence_" + part_name(p, ci), trajectory_table(evolve(model, ip.theta, s.rho0), stride));
        if (!p.is_discrete()) ++ci;
      }
      double dev = 0.0;
      for (std::size_t i = 0; i < grid.size(); ++i) dev = std::max(dev, max_abs(total.theta[i] - inf.theta.theta[i]));
      checks["theta_additivity"] = dev;
    }
  }

  if (do_higher) {
    if (!s.continuous.empty()) {
      throw UnsupportedError("methods.higher_order needs a bath of discrete modes only");
    }
    MomentOptions mo;
    mo.max_order = std::max(4, higher.order);
    const ThetaSeries series = theta_series(s.modes, model, s.thermal, grid, higher.order, mo);
    const ReducedTrajectory traj = evolve(model, series.total(higher.order), s.rho0);
    emit("higher_order", trajectory_table(traj, stride));
    methods["higher_order"] = {{"order", higher.order}, {"max_imag", traj.max_imag}};
  }

  if (do_wcme) {
    if (!s.is_two_level() || !s.modes.empty() || s.continuous.size() != 1) {
      throw UnsupportedError("methods.wcme needs a two_level system and exactly one continuous density");
    }
    const ReducedTrajectory traj = wcme_evolve(*s.epsilon, *s.delta, s.continuous[0], s.thermal, s.rho0, grid);
    emit("wcme", trajectory_table(traj, stride));
    methods["wcme"] = {{"max_imag", traj.max_imag}};
  }

  if (do_tcl2) {
    const KernelSamples half = kernel(parts, s.thermal, TimeGrid{0.5 * grid.dt, 2 * grid.steps});
    const ReducedTrajectory traj = tcl2_reference(model, half, grid, s.rho0);
    emit("tcl2", trajectory_table(traj, stride));
    methods["tcl2"] = {{"max_imag", traj.max_imag}};
  }

  if (do_oracle) {
    if (!s.continuous.empty()) throw UnsupportedError("methods.oracle needs a bath of discrete modes only");
    FockConfig fc;
    fc.modes = s.modes;
    fc.n_fock = s.oracle.n_fock;
    fc.tail_tolerance = s.oracle.tail;
    fc.rtol = s.oracle.rtol;
    fc.atol = s.oracle.atol;
    fc.integrator = s.oracle.integrator;
    fc.max_step = s.oracle.step;
    std::vector<double> times;
    for (std::size_t i = 0; i < grid.size(); i += stride) times.push_back(grid.time(i));
    const OracleTrajectory o = lindblad_evolve(model, fc, s.thermal, devectorize(s.rho0, *model.basis), times);
    Table t;
    t.columns.push_back("t");
    for (const std::string& c : observable_columns(s.n)) t.columns.push_back(c);
    for (std::size_t i = 0; i < times.size(); ++i) {
      std::vector<double> row{times[i]};
      for (int j = 0; j < s.n * s.n - 1; ++j) row.push_back(o.states[i].expectation(j));
      t.rows.push_back(std::move(row));
    }
    emit("oracle", t);
    methods["oracle"] = {{"levels", o.levels},
                         {"max_trace_error", o.max_trace_error},
                         {"max_hermiticity_error", o.max_hermiticity_error}};
  }

  json summary;
  summary["version"] = {{"tiered", kVersion},
                        {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                      "." + std::to_string(EIGEN_MINOR_VERSION)}};
  summary["scenario"] = to_json(s);
  const json rs = rates_summary(s);
  for (auto it = rs.begin(); it != rs.end(); ++it) summary[it.key()] = it.value();
  summary["methods"] = methods;
  summary["checks"] = checks;
  summary["files"] = res.files;
  summary["warnings"] = warnings.messages();
  write_json(res.dir / "summary.json", summary);
  res.files.push_back("summary.json");
  res.summary = std::move(summary);
  return res;
}

Table sweep(const Scenario& s, const SweepOptions& options) {
  if (!s.is_two_level()) throw UnsupportedError("sweep needs a two_level system");
  if (options.points < 1) throw ValidationError("--points must be at least 1");
  const bool mode_param = options.param == "omega" || options.param == "g" || options.param == "gamma";
  if (!mode_param && options.param != "kT" && options.param != "beta" && options.param != "epsilon" &&
      options.param != "delta") {
    throw ValidationError("unknown sweep parameter '" + options.param +
                          "' (use omega, g, gamma, kT, beta, epsilon or delta)");
  }
  if ((mode_param || options.gamma_over_omega) && s.modes.empty()) {
    throw ValidationError("sweeping mode parameters needs at least one discrete mode");
  }
  Table t{{options.param, "omega_rabi", "gamma_relax", "gamma_dephase", "lamb_shift", "sigma_z_tilde", "t_eff",
           "relax_scaled"},
          {}};
  for (int i = 0; i < options.points; ++i) {
    const double x = options.points == 1 ? options.from
                                         : options.from + (options.to - options.from) * i / (options.points - 1);
    Scenario c = s;
    double eps = *c.epsilon, Delta = *c.delta;
    if (options.param == "omega") c.modes[0].omega = x;
    if (options.param == "g") c.modes[0].g = x;
    if (options.param == "gamma") c.modes[0].gamma = x;
    if (options.param == "kT") c.thermal = ThermalParams::from_kT(x);
    if (options.param == "beta") c.thermal = ThermalParams::from_beta(x);
    if (options.param == "epsilon") eps = x;
    if (options.param == "delta") Delta = x;
    if (options.gamma_over_omega) c.modes[0].gamma = *options.gamma_over_omega * c.modes[0].omega;
    const RateReport r = c.modes.size() == 1 && c.continuous.empty()
                             ? rabi_rates(eps, Delta, c.modes[0], c.thermal)
                             : multimode_rates(eps, Delta, c.bath_parts(), c.thermal);
    const double g2 = c.modes.empty() ? 0.0 : c.modes[0].g * c.modes[0].g;
    const double scaled = g2 > 0.0 ? r.omega_rabi * r.gamma_relax / g2 : std::nan("");
    t.rows.push_back({x, r.omega_rabi, r.gamma_relax, r.gamma_dephase, r.lamb_shift, r.steady_sigma_z_tilde, r.t_eff,
                      scaled});
  }
  return t;
}

}  // namespace tiered
