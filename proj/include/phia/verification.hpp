#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "phia/controller.hpp"
#include "phia/equilibrium.hpp"
#include "phia/ph_system.hpp"
#include "phia/report.hpp"
#include "phia/simulator.hpp"

namespace phia {

/// Per-assumption verdicts for a disturbance case. Required subsets:
/// matched A1-A6, unmatched A1-A3 A5 A7 A8, mixed A1-A5 A7 A9. Existence
/// assumptions (A6, A8, A9) are discharged by running the equilibrium solver
/// on `dist`. Plant-class conditions appear as A0 entries, controller
/// conditions as controller entries.
CheckReport check_assumptions(const PartitionedPHSystem& sys, const IntegralController& ctl,
                              const Disturbance& dist, DisturbanceCase kind,
                              std::uint64_t seed = kDefaultSeed);

/// Pass iff W(t_{k+1}) <= W(t_k) + slack for every step starting at or after t_from.
CheckReport check_lyapunov_monotone(const Trajectory& traj, double slack_per_step = tol::kLyapunovSlack,
                                    double t_from = -std::numeric_limits<double>::infinity());

/// Largest single-step increase of W (0 when non-increasing).
double worst_lyapunov_violation(const Trajectory& traj,
                                double t_from = -std::numeric_limits<double>::infinity());

/// Terminal |w - w_bar|_inf <= tol and |x2 - x2*|_inf <= tol. The full-state
/// entry is skipped when the target layout differs from the trajectory's.
CheckReport check_convergence(const Trajectory& traj, const EquilibriumState& target,
                              double tol = tol::kConvergence);

struct CbIGap {
  double original = 0.0;     // compared in (x1, x2, zeta)
  double transformed = 0.0;  // compared in (x1, x2, z)
};

/// Integrates the closed loop in both coordinate systems and measures the
/// sup-norm gap in each direction, using dense output at the other run's times.
/// Adaptive runs use rtol <= 1e-10 and atol <= 1e-12 regardless of cfg.
CbIGap cbi_trajectory_gap(const PartitionedPHSystem& sys, const IntegralController& ctl,
                          const Disturbance& dist, const Vector& w0, const IntegratorConfig& cfg);

CheckReport check_cbi_equivalence(const PartitionedPHSystem& sys, const IntegralController& ctl,
                                  const Disturbance& dist, const Vector& w0, const IntegratorConfig& cfg,
                                  double tol = tol::kTrajectory);

/// Central-difference gradient (and Hessian, when analytic) agreement at
/// relative tolerance 1e-5, plus Hessian symmetry.
CheckReport check_gradient_consistency(const HamiltonianFn& H, const std::vector<Vector>& samples,
                                       double tol = tol::kFiniteDifference);

/// Assembled F grad Hcl - d against direct substitution of the control law,
/// the closed/open-loop gradient identity, and F + F^T = diag(-2R1, -2R2, 0).
CheckReport check_assembly(const ClosedLoopSystem& cl, const Disturbance& dist,
                           const std::vector<Vector>& samples);

/// Passive-output baseline: assembled structure against plant_rhs with
/// u = -KI^T grad Hc(zeta) and zeta' = KI y.
CheckReport check_assembly(const PassiveIAClosedLoop& cl, const Disturbance& dist,
                           const std::vector<Vector>& samples);

/// Relative sup-norm agreement of two right-hand sides over samples at time t.
CheckEntry check_rhs_agreement(const std::string& name, const std::string& anchor, const Rhs& a, const Rhs& b,
                               const std::vector<Vector>& samples, double t, double tol = tol::kAlgebraic);

/// Samples of the closed-loop state: plant samples from the domain with zeta
/// drawn around E^T x1.
std::vector<Vector> closed_loop_samples(const ClosedLoopSystem& cl, int n = 100,
                                        std::uint64_t seed = kDefaultSeed);
/// Plant samples with zeta drawn from [-1, 1]^zeta_dim.
std::vector<Vector> augmented_samples(const PartitionedPHSystem& sys, int zeta_dim, int n = 100,
                                      std::uint64_t seed = kDefaultSeed);

}  // namespace phia
