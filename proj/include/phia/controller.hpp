#pragma once

#include <cstdint>
#include <functional>
#include <optional>

#include "phia/hamiltonian.hpp"
#include "phia/ph_system.hpp"
#include "phia/report.hpp"

namespace phia {

/// Integral-action controller on the non-passive output:
///
///   u     = (J1 - R1) E grad_z Hc(z),   z = E^T x1 - zeta
///   zeta' = E^T J12 dH/dx2
///
/// E is m x p, constant and full rank; Hc is strictly convex on R^p with an
/// invertible gradient map.
class IntegralController {
 public:
  using GradInverse = std::function<Vector(const Vector&)>;

  /// grad_inverse may be empty, in which case it is computed by damped Newton.
  IntegralController(Matrix E, HamiltonianFn Hc, GradInverse grad_inverse = {});

  /// Hc(z) = 1/2 z^T Kc^{-1} z with Kc symmetric positive definite.
  static IntegralController quadratic(Matrix E, const Matrix& Kc);

  const Matrix& E() const { return E_; }
  const HamiltonianFn& Hc() const { return Hc_; }
  int m() const { return static_cast<int>(E_.rows()); }
  int p() const { return static_cast<int>(E_.cols()); }

  Vector z(const Vector& x1, const Vector& zeta) const { return E_.transpose() * x1 - zeta; }

  /// Solves grad_z Hc(z) = v for z.
  Vector grad_inverse(const Vector& v) const;

  /// E full rank, grad_inverse round trip, strict convexity of Hc, on samples
  /// drawn from [-1, 1]^p.
  CheckReport validate(std::uint64_t seed = kDefaultSeed) const;

 private:
  Matrix E_;
  HamiltonianFn Hc_;
  GradInverse grad_inverse_;
};

/// Damped Newton solve of grad H(z) = v starting from 0; 50 iterations, tol 1e-12.
Vector newton_gradient_inverse(const HamiltonianFn& h, const Vector& v);

/// J12 evaluated at the open-loop minimizer; equals J12 when J12 is constant.
Matrix default_E(const PartitionedPHSystem& sys);

Vector control_law(const PartitionedPHSystem& sys, const IntegralController& ctl, const Vector& x1,
                   const Vector& x2, const Vector& zeta);

Vector controller_rhs(const PartitionedPHSystem& sys, const IntegralController& ctl, const Vector& x1,
                      const Vector& x2);

/// Closed loop evaluated by substitution: plant_rhs with u = control_law and
/// zeta' = controller_rhs. Independent of the assembled structure matrix.
Vector feedback_rhs(const PartitionedPHSystem& sys, const IntegralController& ctl, const Vector& w,
                    const Disturbance& dist, double t);

/// Closed loop on w = (x1, x2, zeta):
///
///   w' = F(x) grad Hcl(w) - [d1; d2; 0],   Hcl = H(x) + Hc(E^T x1 - zeta)
///
///        [ J1 - R1      J12         0        ]
///   F =  [ -J12^T     J2 - R2   -J12^T E     ]
///        [   0        E^T J12       0        ]
class ClosedLoopSystem {
 public:
  ClosedLoopSystem(PartitionedPHSystem sys, IntegralController ctl);

  const PartitionedPHSystem& plant() const { return sys_; }
  const IntegralController& controller() const { return ctl_; }
  const HamiltonianFn& Hcl() const { return Hcl_; }
  int m() const { return sys_.m(); }
  int p() const { return sys_.p(); }
  int dim() const { return sys_.m() + 2 * sys_.p(); }

  Vector plant_state(const Vector& w) const { return w.head(sys_.n()); }
  Vector zeta(const Vector& w) const { return w.tail(sys_.p()); }
  Vector join(const Vector& x1, const Vector& x2, const Vector& zeta) const;

  Matrix F(const Vector& w) const;
  Vector rhs(const Vector& w, const Disturbance& dist, double t) const;
  Vector rhs(const Vector& w, const Vector& d1, const Vector& d2) const;
  Vector input(const Vector& w) const;

  /// (x1*, x2*, E^T x1* - z0) with grad Hc(z0) = 0.
  Vector undisturbed_equilibrium() const;

 private:
  PartitionedPHSystem sys_;
  IntegralController ctl_;
  HamiltonianFn Hcl_;
};

/// Validates the plant structure and the controller, then assembles the
/// closed loop. Throws AssumptionError naming the failed checks.
ClosedLoopSystem assemble_closed_loop(const PartitionedPHSystem& sys, const IntegralController& ctl,
                                      std::uint64_t seed = kDefaultSeed);

/// Classical integral action on the passive output, w = (x1, x2, zeta) with
/// zeta in R^m:
///
///        [ J1 - R1     J12     -KI^T ]
///   w' = [ -J12^T    J2 - R2     0   ] grad Hcl - [d1; d2; 0],  Hcl = H(x) + Hc(zeta)
///        [   KI         0        0   ]
class PassiveIAClosedLoop {
 public:
  PassiveIAClosedLoop(PartitionedPHSystem sys, Matrix KI, HamiltonianFn Hc);

  const PartitionedPHSystem& plant() const { return sys_; }
  const HamiltonianFn& Hcl() const { return Hcl_; }
  const Matrix& KI() const { return KI_; }
  int dim() const { return sys_.n() + sys_.m(); }

  Matrix structure(const Vector& w) const;
  Vector rhs(const Vector& w, const Disturbance& dist, double t) const;
  /// Plant input u = -KI^T grad Hc(zeta) (with G1 = I).
  Vector input(const Vector& w) const;

 private:
  PartitionedPHSystem sys_;
  Matrix KI_;
  HamiltonianFn Hc_;
  HamiltonianFn Hcl_;
};

/// Refuses when KI is rank deficient or G1 is singular at a sampled state.
/// G1 defaults to the identity of the plant class.
PassiveIAClosedLoop passive_ia_closed_loop(const PartitionedPHSystem& sys, const Matrix& KI,
                                           const HamiltonianFn& Hc,
                                           const std::optional<MatrixField>& G1 = std::nullopt,
                                           std::uint64_t seed = kDefaultSeed);

/// Rows form an orthonormal basis of null(J12^T), so annihilator * J12 = 0.
Matrix left_annihilator(const Matrix& J12);

struct ExtendedSystem {
  PartitionedPHSystem system;
  Matrix annihilator;  // (m - p) x m
  Matrix J12_tilde;    // m x m, [J12, annihilator^T]
  double condition_number = 0.0;
};

/// Adds gamma in R^{m-p} with gamma' = -J12perp dH/dx1 and u = J12perp^T gamma + u',
/// giving a plant of the same class with x2~ = (x2, gamma), J12~ square and
/// invertible, H' = H + 1/2 |gamma|^2. Requires p < m and constant J12.
ExtendedSystem dynamic_extension(const PartitionedPHSystem& sys, std::uint64_t seed = kDefaultSeed);

/// Pads d2 with zeros for the gamma block.
Disturbance extend_disturbance(const Disturbance& dist, int extra);

}  // namespace phia
