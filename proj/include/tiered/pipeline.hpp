#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tiered/rates.hpp"
#include "tiered/scenario.hpp"
#include "tiered/table.hpp"

namespace tiered {

inline constexpr const char* kVersion = "0.1.0";

// sx, sy, sz for n = 2, otherwise nu1 ... nu{n^2-1}
std::vector<std::string> observable_columns(int n);

// t and <nu_i> = 2 P_i at every stride-th grid point
Table trajectory_table(const ReducedTrajectory& traj, std::size_t stride = 1);

nlohmann::json to_json(const RateReport& r);

// rate report, reorganization times and steady state for the scenario
nlohmann::json rates_summary(const Scenario& s);

struct RunOptions {
  std::optional<int> order;  // 2 or 4, overrides methods.higher_order
  std::optional<std::filesystem::path> out;
  bool oracle_only = false;
};

struct RunResult {
  std::filesystem::path dir;
  std::vector<std::string> files;
  nlohmann::json summary;
};

// writes <out>/<method>.csv for every requested method plus summary.json
RunResult run_scenario(const Scenario& s, const RunOptions& options = {});

struct SweepOptions {
  std::string param;  // omega, g, gamma (mode 0), kT, beta, epsilon, delta
  double from = 0.0;
  double to = 0.0;
  int points = 2;
  // when set, mode 0 gets gamma = ratio * omega at every point
  std::optional<double> gamma_over_omega;
};

Table sweep(const Scenario& s, const SweepOptions& options);

}  // namespace tiered
