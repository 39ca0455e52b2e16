#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace phia {

/// One verdict: a measured quantity compared against a threshold.
struct CheckEntry {
  std::string name;
  bool passed = false;
  double value = 0.0;
  double threshold = 0.0;
  // Which property or assumption the check certifies.
  std::string anchor;
  // Negative controls: the check is supposed to fail.
  bool expected_fail = false;

  bool as_expected() const { return passed != expected_fail; }
};

struct CheckReport {
  std::vector<CheckEntry> checks;
  std::optional<std::uint64_t> seed;

  /// Conjunction of all verdicts.
  bool overall() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckEntry& c) { return c.passed; });
  }

  /// Every verdict matches its expectation (negative controls fail, the rest pass).
  bool all_as_expected() const {
    return std::all_of(checks.begin(), checks.end(),
                       [](const CheckEntry& c) { return c.as_expected(); });
  }

  const CheckEntry* find(const std::string& name) const {
    for (const auto& c : checks)
      if (c.name == name) return &c;
    return nullptr;
  }

  void add(CheckEntry entry) { checks.push_back(std::move(entry)); }

  void append(const CheckReport& other) {
    checks.insert(checks.end(), other.checks.begin(), other.checks.end());
    if (!seed) seed = other.seed;
  }

  // Stable ordering by name so merged reports are deterministic.
  void sort() {
    std::stable_sort(checks.begin(), checks.end(),
                     [](const CheckEntry& a, const CheckEntry& b) { return a.name < b.name; });
  }
};

// Tolerance tiers, separated by error source.
namespace tol {
inline constexpr double kAlgebraic = 1e-12;
inline constexpr double kGradientIdentity = 1e-10;
inline constexpr double kFiniteDifference = 1e-5;
inline constexpr double kTrajectory = 1e-7;
inline constexpr double kConvergence = 1e-5;
inline constexpr double kRank = 1e-8;
inline constexpr double kConvexity = 1e-6;
inline constexpr double kStructure = 1e-10;
inline constexpr double kEquilibriumResidual = 1e-8;
inline constexpr double kLyapunovSlack = 1e-9;
}  // namespace tol

}  // namespace phia
