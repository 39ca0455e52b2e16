#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "phia/controller.hpp"
#include "phia/ph_system.hpp"
#include "phia/simulator.hpp"

namespace phia {

/// Malformed or inconsistent scenario document. The message names the line
/// (syntax errors) or the field path (semantic errors).
class ScenarioError : public ContractViolation {
 public:
  using ContractViolation::ContractViolation;
};

/// Series RLC: x1 = inductor flux, x2 = capacitor charge.
struct RlcParams {
  double L = 1.0;
  double C = 1.0;
  double R = 1.0;
  double x2_star = 1.0;
};

/// x1 = momenta p in R^m, x2 = configuration q in R^p, J12 = -K^T.
struct MechanicalParams {
  Matrix M;
  Matrix D;
  Matrix K;  // p x m
  double k = 1.0;
  Vector q_star;
};

/// Quadratic H = 1/2 (x - x*)^T Q (x - x*).
struct LinearParams {
  Matrix J1, J12, J2, R1, R2, Q;
  Vector x_star;
};

/// RLC with R = 0.
struct LosslessLcParams {
  double L = 1.0;
  double C = 1.0;
  double x2_star = 1.0;
};

using SystemParams = std::variant<RlcParams, MechanicalParams, LinearParams, LosslessLcParams>;

struct SystemSpec {
  SystemParams params;
  bool dynamic_extension = false;
  std::optional<StateBox> box;  // over the un-extended state
};

enum class ControllerVariant { Direct, Cbi, CbiTilde, PassiveBaseline };

std::string to_string(ControllerVariant v);
ControllerVariant controller_variant_from_string(const std::string& s);

struct ControllerSpec {
  ControllerVariant variant = ControllerVariant::Direct;
  std::optional<Matrix> E;   // nullopt: "auto", J12 at x_star
  std::optional<Matrix> Kc;  // nullopt: identity
  std::optional<Matrix> Rd;  // cbi_tilde only
  std::optional<Matrix> KI;  // passive_baseline only
};

struct InitialCondition {
  // Either an explicit closed-loop state, or an offset from the undisturbed
  // closed-loop equilibrium.
  std::optional<Vector> w0;
  Vector equilibrium_offset;
};

struct ExpectedEquilibrium {
  Vector x1_bar;
  Vector x2_star;
  Vector zeta_bar;
};

struct Scenario {
  std::string name;
  std::string description;
  SystemSpec system;
  ControllerSpec controller;
  Disturbance disturbance;
  IntegratorConfig sim;
  InitialCondition initial;
  std::vector<std::string> checks;
  std::vector<std::string> expected_fail;
  std::optional<ExpectedEquilibrium> expected;

  /// Dimensions after any dynamic extension: actuated m, unactuated p,
  /// controller state dimension.
  int m() const;
  int p() const;
  int zeta_dim() const;
};

/// Check groups a scenario may request.
const std::vector<std::string>& known_check_groups();

Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::string& path);
/// Canonical form: fixed field order, two-space indent, trailing newline.
std::string serialize_scenario(const Scenario& s);

/// Refuses non-positive L, C, R.
PartitionedPHSystem build_rlc(const RlcParams& params);
/// Refuses M or D not symmetric positive definite, K not full row rank, k <= 0.
PartitionedPHSystem build_mechanical(const MechanicalParams& params);
PartitionedPHSystem build_linear(const LinearParams& params);
PartitionedPHSystem build_lossless_lc(const LosslessLcParams& params);

/// Plant described by the scenario, after dynamic extension when requested.
struct BuiltSystem {
  PartitionedPHSystem plant;
  Disturbance disturbance;
  std::optional<ExtendedSystem> extension;
};

BuiltSystem build_system(const Scenario& s, std::uint64_t seed = kDefaultSeed);

/// Integral controller with E resolved ("auto" -> J12(x_star)) and Hc from Kc.
IntegralController build_controller(const Scenario& s, const PartitionedPHSystem& plant);

}  // namespace phia
