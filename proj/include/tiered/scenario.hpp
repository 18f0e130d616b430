#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tiered/bath.hpp"
#include "tiered/influence.hpp"
#include "tiered/oracle.hpp"

namespace tiered {

struct InfluenceSettings {
  bool enabled = false;
  bool closed_form = false;  // spin-boson component formulas instead of quadrature
  bool components = false;   // also run every bath part on its own
  double memory_tolerance = 1e-6;
  std::optional<double> memory_time;
  bool truncate = true;
};

struct OracleSettings {
  bool enabled = false;
  std::vector<int> n_fock;  // empty: chosen from tail
  double tail = 1e-8;
  OracleIntegrator integrator = OracleIntegrator::Adaptive;
  double rtol = 1e-8;
  double atol = 1e-10;
  double step = 0.0;
};

struct HigherOrderSettings {
  bool enabled = false;
  int order = 4;
};

struct Scenario {
  std::string source;  // file name, for messages

  int n = 2;
  std::optional<double> epsilon, delta;  // set for two_level systems
  std::vector<HamiltonianSegment> schedule;
  RVector coupling;
  PVector rho0;
  std::string rho0_name;  // empty when given as coefficients

  ThermalParams thermal;
  bool thermal_from_beta = false;
  std::vector<DampedMode> modes;
  std::vector<SpectralDensity> continuous;

  double t_max = 0.0;
  double dt = 0.0;
  std::size_t output_every = 1;

  InfluenceSettings influence;
  bool wcme = false;
  bool tcl2 = false;
  OracleSettings oracle;
  HigherOrderSettings higher_order;

  std::string output_path = "out";
  std::string output_format = "csv";

  bool is_two_level() const { return epsilon.has_value(); }
  SystemModel model() const;
  TimeGrid grid() const { return TimeGrid::covering(t_max, dt); }
  // discrete modes (if any) followed by the continuous densities
  std::vector<SpectralDensity> bath_parts() const;
};

// throws ValidationError with "source:line: field: problem" messages
Scenario parse_scenario(const std::string& text, const std::string& source = "<string>");
Scenario load_scenario(const std::filesystem::path& path);

// normalized echo; parse_scenario(echo.dump()) reproduces the scenario
nlohmann::json to_json(const Scenario& s);

}  // namespace tiered
