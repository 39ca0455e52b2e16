// phia: run integral-action scenarios, check assumptions, predict equilibria.

#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "phia/runner.hpp"

namespace {

void print_report(const phia::CheckReport& rep) {
  for (const auto& c : rep.checks) {
    std::printf("%-4s %-48s value=%-12.4g threshold=%-10.3g%s\n", c.passed ? "PASS" : "FAIL", c.name.c_str(),
                c.value, c.threshold, c.expected_fail ? "  (expected failure)" : "");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"port-Hamiltonian integral action: simulation and verification"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string out_dir = ".";
  bool force = false;
  std::uint64_t seed = phia::kDefaultSeed;

  auto* run = app.add_subcommand("run", "simulate a scenario and write <name>.csv and <name>.report.json");
  run->add_option("scenario", scenario_path, "scenario file")->required();
  run->add_option("--out", out_dir, "output directory");
  run->add_flag("--force", force, "simulate even when required assumptions fail");
  run->add_option("--seed", seed, "seed for sampled checks");

  auto* check = app.add_subcommand("check", "assumption checks only");
  check->add_option("scenario", scenario_path, "scenario file")->required();
  check->add_option("--seed", seed, "seed for sampled checks");

  std::string suite_dir;
  auto* suite = app.add_subcommand("suite", "run every scenario in a directory");
  suite->add_option("dir", suite_dir, "directory of scenario files")->required();
  suite->add_option("--out", out_dir, "output directory");
  suite->add_flag("--force", force, "simulate even when required assumptions fail");
  suite->add_option("--seed", seed, "seed for sampled checks");

  auto* equilibrium = app.add_subcommand("equilibrium", "print the predicted equilibrium as JSON");
  equilibrium->add_option("scenario", scenario_path, "scenario file")->required();

  auto* fmt = app.add_subcommand("fmt", "print a scenario in canonical form");
  fmt->add_option("scenario", scenario_path, "scenario file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : phia::exit_code::kUsage;
  }

  const phia::RunOptions opts{out_dir, force, seed, true};
  try {
    if (*run) {
      const auto r = phia::run_scenario_file(scenario_path, opts);
      print_report(r.report);
      std::fflush(stdout);
      std::fprintf(r.exit_code == 0 ? stdout : stderr, "%s: %s\n", r.scenario.c_str(), r.message.c_str());
      return r.exit_code;
    }
    if (*suite) {
      const int code = phia::run_suite(suite_dir, opts);
      std::printf("suite finished, exit code %d (index: %s/index.json)\n", code, out_dir.c_str());
      return code;
    }
    const auto s = phia::load_scenario(scenario_path);
    if (*fmt) {
      std::cout << phia::serialize_scenario(s);
      return phia::exit_code::kSuccess;
    }
    if (*check) {
      const auto rep = phia::assumption_report(s, seed);
      print_report(rep);
      return rep.all_as_expected() ? phia::exit_code::kSuccess : phia::exit_code::kAssumption;
    }
    std::cout << phia::equilibrium_json(s, phia::predicted_equilibrium(s, seed));
    return phia::exit_code::kSuccess;
  } catch (const phia::ScenarioError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return phia::exit_code::kUsage;
  } catch (const phia::ContractViolation& e) {
    std::fprintf(stderr, "assumption failure: %s\n", e.what());
    return phia::exit_code::kAssumption;
  } catch (const phia::AssumptionError& e) {
    std::fprintf(stderr, "assumption failure: %s\n", e.what());
    return phia::exit_code::kAssumption;
  } catch (const phia::NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return phia::exit_code::kNumerical;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return phia::exit_code::kNumerical;
  }
}
