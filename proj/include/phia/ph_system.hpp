#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "phia/hamiltonian.hpp"
#include "phia/linalg.hpp"
#include "phia/report.hpp"

namespace phia {

inline constexpr std::uint64_t kDefaultSeed = 20160712;

/// Per-coordinate interval on which global assumptions are checked by sampling.
struct StateBox {
  Vector lower;
  Vector upper;

  static StateBox around(const Vector& center, double half_width);
  int dim() const { return static_cast<int>(lower.size()); }
  bool contains(const Vector& x) const;
};

/// n_random uniform points in the box, then the reference point, then the box
/// corners (corners only for dim <= 10).
std::vector<Vector> sample_states(const StateBox& box, const Vector& reference, int n_random = 100,
                                  std::uint64_t seed = kDefaultSeed);

/// Plant class with state split x = (x1, x2), dim x1 = m, dim x2 = p <= m:
///
///   x1' = (J1 - R1) dH/dx1 + J12 dH/dx2 + u - d1
///   x2' = -J12^T dH/dx1 + (J2 - R2) dH/dx2 - d2
///   y   = dH/dx1
///
/// All matrices are fields over the full state, even when constant. The
/// constancy flags are claims from the builder; validate_structure checks them.
class PartitionedPHSystem {
 public:
  struct Constancy {
    bool J1 = false;
    bool R1 = false;
    bool J12 = false;
  };

  struct Fields {
    int m = 0;
    int p = 0;
    MatrixField J1;
    MatrixField J12;
    MatrixField J2;
    MatrixField R1;
    MatrixField R2;
    HamiltonianFn H;
    Vector x_star;
    StateBox domain;
    Constancy constant;
    std::string name;
  };

  explicit PartitionedPHSystem(Fields f);

  int m() const { return f_.m; }
  int p() const { return f_.p; }
  int n() const { return f_.m + f_.p; }
  const std::string& name() const { return f_.name; }

  Matrix J1(const Vector& x) const { return eval(f_.J1, x, f_.m, f_.m, "J1"); }
  Matrix J12(const Vector& x) const { return eval(f_.J12, x, f_.m, f_.p, "J12"); }
  Matrix J2(const Vector& x) const { return eval(f_.J2, x, f_.p, f_.p, "J2"); }
  Matrix R1(const Vector& x) const { return eval(f_.R1, x, f_.m, f_.m, "R1"); }
  Matrix R2(const Vector& x) const { return eval(f_.R2, x, f_.p, f_.p, "R2"); }

  const HamiltonianFn& H() const { return f_.H; }
  const Vector& x_star() const { return f_.x_star; }
  Vector x1_star() const { return f_.x_star.head(f_.m); }
  Vector x2_star() const { return f_.x_star.tail(f_.p); }
  const StateBox& domain() const { return f_.domain; }
  const Constancy& claimed_constant() const { return f_.constant; }
  const Fields& fields() const { return f_; }

  Vector join(const Vector& x1, const Vector& x2) const;

 private:
  Matrix eval(const MatrixField& fn, const Vector& x, int rows, int cols, const char* what) const;

  Fields f_;
};

/// Constant disturbance (d1 matched, d2 unmatched) switched on at step_time.
struct Disturbance {
  Vector d1;
  Vector d2;
  // Inactive (zero) strictly before step_time, constant from step_time on.
  double step_time = 0.0;

  static Disturbance none(int m, int p);

  bool active(double t) const { return t >= step_time; }
  Vector d1_at(double t) const { return active(t) ? d1 : Vector::Zero(d1.size()); }
  Vector d2_at(double t) const { return active(t) ? d2 : Vector::Zero(d2.size()); }
  bool has_matched() const { return d1.size() > 0 && d1.cwiseAbs().maxCoeff() > 0.0; }
  bool has_unmatched() const { return d2.size() > 0 && d2.cwiseAbs().maxCoeff() > 0.0; }
};

Vector plant_rhs(const PartitionedPHSystem& sys, const Vector& x, const Vector& u,
                 const Disturbance& dist, double t);

/// y = dH/dx1
Vector passive_output(const PartitionedPHSystem& sys, const Vector& x);

/// Non-passive output y_d = dH/dx2.
Vector regulated_output(const PartitionedPHSystem& sys, const Vector& x);

struct StructureReport {
  CheckReport checks;
  // Largest deviation from the value at the first sample.
  double J1_deviation = 0.0;
  double R1_deviation = 0.0;
  double J12_deviation = 0.0;
  double tol = tol::kRank;

  bool passed() const { return checks.overall(); }
  bool J1_constant() const { return J1_deviation <= tol; }
  bool R1_constant() const { return R1_deviation <= tol; }
  bool J12_constant() const { return J12_deviation <= tol; }
};

/// Samples the plant-class conditions: skew J1/J2, R1 > 0, R2 >= 0, full-rank
/// J12 and R1, separable and strongly convex H, stationary x_star, and the
/// builder's constancy claims. Violations are report entries, never thrown.
StructureReport validate_structure(const PartitionedPHSystem& sys, const std::vector<Vector>& samples,
                                   double tol = tol::kRank);
StructureReport validate_structure(const PartitionedPHSystem& sys,
                                   std::uint64_t seed = kDefaultSeed);

/// Port-Hamiltonian system with feedthrough:
///   x' = (J - R) dH + (G - P) u
///   y  = (G + P)^T dH + (M + S) u
struct FeedthroughPHSystem {
  MatrixField J, R, G, P, M, S;
  HamiltonianFn H;

  Vector state_rhs(const Vector& x, const Vector& u) const;
  Vector output(const Vector& x, const Vector& u) const;
};

/// True iff [[R, P], [P^T, S]] is symmetric PSD and [[-J, -G], [G^T, M]] is
/// skew at every sample, within tol.
bool check_feedthrough_structure(const FeedthroughPHSystem& sys, const std::vector<Vector>& samples,
                                 double tol = tol::kStructure);

}  // namespace phia
