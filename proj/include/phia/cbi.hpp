#pragma once

#include <cstdint>

#include "phia/controller.hpp"
#include "phia/ph_system.hpp"

namespace phia {

// Control-by-interconnection view of the integral-action closed loop.
//
// Under z = E^T x1 - zeta the closed loop becomes the power-preserving
// interconnection (u = -y_c, u_c = y) of the plant with R1 removed and a
// port-Hamiltonian controller with feedthrough that carries R1.

/// (x1, x2, zeta) -> (x1, x2, z) with z = E^T x1 - zeta.
Vector cbi_transform(const Vector& w, const Matrix& E);
/// (x1, x2, z) -> (x1, x2, zeta) with zeta = E^T x1 - z.
Vector cbi_untransform(const Vector& wt, const Matrix& E);

/// Closed loop in transformed coordinates (x1, x2, z):
///
///   [x1']   [ J1 - R1         J12       (J1 - R1) E      ] [dH/dx1 ]   [ d1     ]
///   [x2'] = [ -J12^T        J2 - R2          0           ] [dH/dx2 ] - [ d2     ]
///   [z' ]   [ E^T(J1 - R1)     0      E^T (J1 - R1) E    ] [dHc/dz ]   [ E^T d1 ]
class TransformedClosedLoop {
 public:
  TransformedClosedLoop(PartitionedPHSystem sys, IntegralController ctl);

  const PartitionedPHSystem& plant() const { return sys_; }
  const IntegralController& controller() const { return ctl_; }
  int dim() const { return sys_.n() + sys_.p(); }

  Matrix structure(const Vector& wt) const;
  Vector rhs(const Vector& wt, const Disturbance& dist, double t) const;

 private:
  PartitionedPHSystem sys_;
  IntegralController ctl_;
};

struct ControllerOutput {
  Vector z_dot;
  Vector y_c;
};

/// Controller with feedthrough carrying the plant damping:
///
///   z'  = E^T (J1 - R1) E grad Hc + E^T (J1 - R1) u_c - E^T d1
///   y_c = -(J1 - R1) E grad Hc + R1 u_c
///
/// Rejecting a matched disturbance in this form needs d1 as an input.
class CbIController {
 public:
  CbIController(Matrix J1, Matrix R1, Matrix E, HamiltonianFn Hc);

  ControllerOutput rhs(const Vector& z, const Vector& u_c, const Vector& d1) const;

  /// J = E^T J1 E, R = E^T R1 E, G = E^T J1, P = E^T R1, M = 0, S = R1.
  FeedthroughPHSystem as_feedthrough() const;

  const Matrix& E() const { return E_; }
  const HamiltonianFn& Hc() const { return Hc_; }

 private:
  Matrix J1_, R1_, E_;
  HamiltonianFn Hc_;
};

/// Requires constant J1 and R1 (checked on samples of the plant domain).
CbIController make_cbi_controller(const PartitionedPHSystem& sys, const IntegralController& ctl,
                                  std::uint64_t seed = kDefaultSeed);

/// Copy of the plant with R1 replaced by `r1` (constant).
PartitionedPHSystem with_r1(const PartitionedPHSystem& sys, const Matrix& r1);

/// Plant (R1 moved to the controller) + CbIController, on (x1, x2, z).
class CbIInterconnection {
 public:
  CbIInterconnection(const PartitionedPHSystem& sys, CbIController ctrl);

  int dim() const { return lossless_.n() + static_cast<int>(ctrl_.E().cols()); }
  Vector rhs(const Vector& wt, const Disturbance& dist, double t) const;
  /// Plant input u = -y_c.
  Vector input(const Vector& wt, double t, const Disturbance& dist) const;

 private:
  PartitionedPHSystem lossless_;
  CbIController ctrl_;
};

/// Output-feedback integral controller for plants with R1 = 0:
///
///   z'  = J12^T (J1 - Rd) J12 grad Hc + J12^T (J1 - Rd) u_c
///   y_c = -(J1 - Rd) J12 grad Hc + Rd u_c
///
/// Its state equation sees only z and the passive output u_c = y, never x2.
class TildeController {
 public:
  TildeController(Matrix J1, Matrix J12, Matrix Rd, HamiltonianFn Hc);

  ControllerOutput rhs(const Vector& z, const Vector& u_c) const;

  const Matrix& J12() const { return J12_; }
  const Matrix& Rd() const { return Rd_; }
  const HamiltonianFn& Hc() const { return Hc_; }

 private:
  Matrix J1_, J12_, Rd_;
  HamiltonianFn Hc_;
};

/// Refuses when Rd is not symmetric positive definite.
TildeController cbi_tilde_controller(const Matrix& J1, const Matrix& J12, const Matrix& Rd,
                                     const HamiltonianFn& Hc);

/// Plant with R1 = 0 and constant J1, J12, in feedback with a TildeController.
class TildeInterconnection {
 public:
  TildeInterconnection(const PartitionedPHSystem& sys, TildeController ctrl,
                       std::uint64_t seed = kDefaultSeed);

  const PartitionedPHSystem& plant() const { return sys_; }
  const TildeController& controller() const { return ctrl_; }
  int dim() const { return sys_.n() + static_cast<int>(ctrl_.J12().cols()); }

  Vector rhs(const Vector& wt, const Disturbance& dist, double t) const;
  Vector input(const Vector& wt) const;

  /// Plant with R1 := Rd and the integral controller E = J12 whose closed loop
  /// this interconnection reproduces in transformed coordinates.
  ClosedLoopSystem equivalent_closed_loop() const;

 private:
  PartitionedPHSystem sys_;
  TildeController ctrl_;
};

}  // namespace phia
