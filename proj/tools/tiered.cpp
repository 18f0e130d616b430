#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "tiered/errors.hpp"
#include "tiered/pipeline.hpp"
#include "tiered/scenario.hpp"
#include "tiered/table.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kValidation = 1;
constexpr int kNumerical = 2;
constexpr int kThreshold = 3;

std::filesystem::path out_dir(const tiered::Scenario& s, const std::string& flag) {
  return flag.empty() ? std::filesystem::path(s.output_path) : std::filesystem::path(flag);
}

void print_files(const tiered::RunResult& r) {
  for (const std::string& f : r.files) std::cout << (r.dir / f).string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Influence-functional dynamics of a system in a two-tier bosonic environment"};
  app.set_version_flag("--version", std::string(tiered::kVersion));
  app.require_subcommand(1);

  std::string scenario_path, out, csv_a, csv_b;
  std::optional<int> order;
  std::optional<double> threshold;
  tiered::SweepOptions sweep_opts;
  std::optional<double> gamma_over_omega;

  auto* run = app.add_subcommand("run", "run every requested method and write CSV + summary.json");
  run->add_option("scenario", scenario_path, "scenario file")->required()->check(CLI::ExistingFile);
  run->add_option("--order", order, "perturbation order of the extra series block (2 or 4)")
      ->check(CLI::IsMember({2, 4}));
  run->add_option("--out", out, "output directory (default: output.path)");

  auto* oracle = app.add_subcommand("oracle", "run only the truncated-Fock Lindblad reference");
  oracle->add_option("scenario", scenario_path, "scenario file")->required()->check(CLI::ExistingFile);
  oracle->add_option("--out", out, "output directory (default: output.path)");

  auto* rates = app.add_subcommand("rates", "print rates, reorganization times and steady state as JSON");
  rates->add_option("scenario", scenario_path, "scenario file")->required()->check(CLI::ExistingFile);
  rates->add_option("--out", out, "also write <out>/rates.json");

  auto* compare = app.add_subcommand("compare", "per-column max and RMS deviation of two trajectory CSVs");
  compare->add_option("a", csv_a, "first CSV")->required()->check(CLI::ExistingFile);
  compare->add_option("b", csv_b, "second CSV")->required()->check(CLI::ExistingFile);
  compare->add_option("--threshold", threshold, "exit with code 3 if any max deviation exceeds this");

  auto* sweep = app.add_subcommand("sweep", "rates along a one-parameter sweep, written to <out>/sweep.csv");
  sweep->add_option("scenario", scenario_path, "scenario file")->required()->check(CLI::ExistingFile);
  sweep->add_option("--param", sweep_opts.param, "omega, g, gamma, kT, beta, epsilon or delta")->required();
  sweep->add_option("--from", sweep_opts.from, "first value")->required();
  sweep->add_option("--to", sweep_opts.to, "last value")->required();
  sweep->add_option("--points", sweep_opts.points, "number of points")->default_val(2);
  sweep->add_option("--gamma-over-omega", gamma_over_omega, "tie the mode damping to its frequency");
  sweep->add_option("--out", out, "output directory (default: output.path)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  try {
    if (*run || *oracle) {
      const tiered::Scenario s = tiered::load_scenario(scenario_path);
      tiered::RunOptions opts;
      opts.order = order;
      opts.out = out_dir(s, out);
      opts.oracle_only = static_cast<bool>(*oracle);
      print_files(tiered::run_scenario(s, opts));
      return kOk;
    }
    if (*rates) {
      const tiered::Scenario s = tiered::load_scenario(scenario_path);
      nlohmann::json j = tiered::rates_summary(s);
      j["scenario"] = tiered::to_json(s);
      const std::string text = j.dump(2);
      std::cout << text << '\n';
      if (!out.empty()) {
        std::filesystem::create_directories(out);
        std::ofstream f(std::filesystem::path(out) / "rates.json", std::ios::binary);
        f << text << '\n';
      }
      return kOk;
    }
    if (*compare) {
      const tiered::ComparisonReport r = tiered::compare_tables(tiered::read_csv(csv_a), tiered::read_csv(csv_b));
      nlohmann::json j;
      j["rows"] = r.rows;
      j["max_deviation"] = r.max_deviation();
      for (const tiered::ColumnDeviation& c : r.columns) j["columns"][c.column] = {{"max", c.max}, {"rms", c.rms}};
      if (threshold) {
        j["threshold"] = *threshold;
        j["passed"] = r.max_deviation() <= *threshold;
      }
      std::cout << j.dump(2) << '\n';
      if (threshold && !(r.max_deviation() <= *threshold)) {
        std::cerr << "max deviation " << tiered::format_number(r.max_deviation()) << " exceeds threshold "
                  << tiered::format_number(*threshold) << '\n';
        return kThreshold;
      }
      return kOk;
    }
    if (*sweep) {
      const tiered::Scenario s = tiered::load_scenario(scenario_path);
      sweep_opts.gamma_over_omega = gamma_over_omega;
      const std::filesystem::path dir = out_dir(s, out);
      std::filesystem::create_directories(dir);
      tiered::write_csv(dir / "sweep.csv", tiered::sweep(s, sweep_opts));
      std::cout << (dir / "sweep.csv").string() << '\n';
      return kOk;
    }
  } catch (const tiered::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const tiered::DegenerateKernelError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const tiered::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  }
  return kValidation;
}
