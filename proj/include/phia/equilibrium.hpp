#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "phia/controller.hpp"
#include "phia/ph_system.hpp"
#include "phia/report.hpp"

namespace phia {

enum class DisturbanceCase { Matched, Unmatched, Mixed };

std::string to_string(DisturbanceCase c);
DisturbanceCase disturbance_case_from_string(const std::string& s);

/// Mixed when both channels are non-zero, Unmatched when only d2 is, Matched otherwise.
DisturbanceCase classify(const Disturbance& dist);

/// Predicted closed-loop gradient (dHcl/dx1, dHcl/dx2, dHcl/dzeta) at the
/// disturbed equilibrium. g_x2 is always zero.
struct EquilibriumGradient {
  Vector g_x1;
  Vector g_x2;
  Vector g_zeta;
  DisturbanceCase kind = DisturbanceCase::Matched;
};

/// Open-loop gradients at the equilibrium, recovered through
/// dH/dx1 = dHcl/dx1 + E dHcl/dzeta, dH/dx2 = dHcl/dx2, dHc/dz = -dHcl/dzeta.
struct OpenLoopGradient {
  Vector dH_dx1;
  Vector dH_dx2;
  Vector dHc_dz;
};

struct EquilibriumState {
  Vector x1_bar;
  Vector x2_star;
  Vector zeta_bar;
  // Infinity norm of the closed-loop right-hand side at the state.
  double residual = 0.0;
  int newton_iterations = 0;

  Vector w() const;
};

/// Newton failure; carries the last iterate and its residual.
class EquilibriumError : public NumericalError {
 public:
  EquilibriumError(const std::string& what, Vector last_iterate, double residual)
      : NumericalError(what), last_iterate(std::move(last_iterate)), residual(residual) {}
  Vector last_iterate;
  double residual;
};

/// Sampled checks for the case-specific structural assumptions: constant J1
/// and R1 (matched, mixed), constant J12 (unmatched, mixed), and E^T J12
/// invertible with (J12^T E)^{-1} J12^T independent of the state.
CheckReport case_assumptions(const PartitionedPHSystem& sys, const IntegralController& ctl,
                             DisturbanceCase kind, std::uint64_t seed = kDefaultSeed);

/// Closed-form equilibrium gradient. J12 is evaluated at `j12_at` (default
/// x_star); J1 and R1 at x_star. Throws AssumptionError when the case
/// assumptions fail or (J1 - R1), (J12^T E) are singular.
EquilibriumGradient equilibrium_gradient(const PartitionedPHSystem& sys, const IntegralController& ctl,
                                         const Disturbance& dist, DisturbanceCase kind,
                                         const std::optional<Vector>& j12_at = std::nullopt,
                                         std::uint64_t seed = kDefaultSeed);

OpenLoopGradient open_loop_gradient_at_equilibrium(const EquilibriumGradient& grad, const Matrix& E);

/// Solves dH/dx1(x1, x2*) = target by damped Newton (Armijo backtracking, 100
/// iterations), then zeta = E^T x1 - (grad Hc)^{-1}(dHc/dz*).
EquilibriumState solve_equilibrium_state(const PartitionedPHSystem& sys, const IntegralController& ctl,
                                         const EquilibriumGradient& grad, const Disturbance& dist);

struct Equilibrium {
  EquilibriumGradient gradient;
  EquilibriumState state;
  int outer_iterations = 1;
};

/// Gradient + state. For a state-dependent J12 the gradient is re-evaluated at
/// the current equilibrium iterate in a damped fixed-point loop until successive
/// x1 differ by at most 1e-10.
Equilibrium solve_equilibrium(const PartitionedPHSystem& sys, const IntegralController& ctl,
                              const Disturbance& dist, DisturbanceCase kind,
                              std::uint64_t seed = kDefaultSeed);
Equilibrium solve_equilibrium(const PartitionedPHSystem& sys, const IntegralController& ctl,
                              const Disturbance& dist, std::uint64_t seed = kDefaultSeed);

}  // namespace phia
