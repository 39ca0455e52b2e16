#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "phia/equilibrium.hpp"
#include "phia/report.hpp"
#include "phia/scenario.hpp"
#include "phia/simulator.hpp"

namespace phia {

// Process exit codes.
namespace exit_code {
inline constexpr int kSuccess = 0;
inline constexpr int kUsage = 1;  // usage or scenario parse error
inline constexpr int kAssumption = 2;
inline constexpr int kNumerical = 3;  // integrator / solver failure, or a check failing unexpectedly
}  // namespace exit_code

struct RunOptions {
  std::string out_dir = ".";
  bool force = false;
  std::uint64_t seed = kDefaultSeed;
  bool write_outputs = true;
};

struct RunSummary {
  Vector terminal_state;
  std::optional<Vector> predicted_equilibrium;
  std::optional<double> settling_time;
  double worst_lyapunov_violation = 0.0;
};

struct RunResult {
  std::string scenario;
  int exit_code = exit_code::kSuccess;
  std::string message;
  std::string trajectory_path;
  std::string report_path;
  CheckReport report;
  RunSummary summary;
  Trajectory trajectory;
  // Predicted equilibrium; for the baseline only x1*, x2* (the regulation target).
  std::optional<EquilibriumState> target;
};

/// Assumption checks only (what `phia check` runs). For the baseline variant
/// these are the plant-class conditions.
CheckReport assumption_report(const Scenario& s, std::uint64_t seed = kDefaultSeed);

/// Predicted equilibrium in (x1, x2, zeta) coordinates. Throws for the
/// passive-output baseline, whose closed loop has no equilibrium under d2.
Equilibrium predicted_equilibrium(const Scenario& s, std::uint64_t seed = kDefaultSeed);

/// Checks computed from the trajectory alone: Lyapunov monotonicity from the
/// disturbance step on, and convergence to `target` (or x2 regulation for the
/// baseline). Used both after simulation and on a reloaded CSV.
CheckReport trajectory_checks(const Scenario& s, const Trajectory& traj,
                              const std::optional<EquilibriumState>& target);

RunResult run_scenario(const Scenario& s, const RunOptions& opts = {});
/// Parse errors come back as exit code 1 with the diagnostic in `message`.
RunResult run_scenario_file(const std::string& path, const RunOptions& opts = {});

/// Runs every *.json in `dir` concurrently; outputs go to out_dir/<name>/ and
/// out_dir/index.json lists results sorted by scenario name. Returns the
/// largest exit code.
int run_suite(const std::string& dir, const RunOptions& opts);

void write_trajectory_csv(const std::string& path, const Trajectory& traj);
/// Dimensions are recovered from the header.
Trajectory read_trajectory_csv(const std::string& path);

std::string report_json(const RunResult& r, std::uint64_t seed);
std::string equilibrium_json(const Scenario& s, const Equilibrium& eq);

/// Applies the scenario's expected_fail list to the report entries.
void mark_expected_failures(CheckReport& report, const std::vector<std::string>& expected_fail);

}  // namespace phia
