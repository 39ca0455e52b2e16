#include "phia/equilibrium.hpp"

#include <algorithm>
#include <sstream>
#include <utility>

namespace phia {

std::string to_string(DisturbanceCase c) {
  switch (c) {
    case DisturbanceCase::Matched: return "matched";
    case DisturbanceCase::Unmatched: return "unmatched";
    case DisturbanceCase::Mixed: return "mixed";
  }
  return "matched";
}

DisturbanceCase disturbance_case_from_string(const std::string& s) {
  if (s == "matched") return DisturbanceCase::Matched;
  if (s == "unmatched") return DisturbanceCase::Unmatched;
  if (s == "mixed") return DisturbanceCase::Mixed;
  throw ContractViolation("unknown disturbance case '" + s + "'");
}

DisturbanceCase classify(const Disturbance& dist) {
  const bool d1 = dist.has_matched();
  const bool d2 = dist.has_unmatched();
  if (d1 && d2) return DisturbanceCase::Mixed;
  if (d2) return DisturbanceCase::Unmatched;
  return DisturbanceCase::Matched;
}

Vector EquilibriumState::w() const { return linalg::concat({&x1_bar, &x2_star, &zeta_bar}); }

namespace {

bool needs_constant_j1_r1(DisturbanceCase k) { return k != DisturbanceCase::Unmatched; }
bool needs_constant_j12(DisturbanceCase k) { return k != DisturbanceCase::Matched; }

// (J12^T E)^{-1} J12^T
Matrix projection(const Matrix& j12, const Matrix& E) {
  return (j12.transpose() * E).fullPivLu().solve(j12.transpose());
}

EquilibriumGradient gradient_formula(const PartitionedPHSystem& sys, const IntegralController& ctl,
                                     const Disturbance& dist, DisturbanceCase kind,
                                     const Vector& j12_at) {
  const int m = sys.m();
  const int p = sys.p();
  require(dist.d1.size() == m && dist.d2.size() == p, "equilibrium_gradient: disturbance dimension mismatch");
  const Vector& x_star = sys.x_star();
  const Matrix& E = ctl.E();
  const Matrix j12 = sys.J12(j12_at);
  const Matrix b = j12.transpose() * E;

  EquilibriumGradient g;
  g.kind = kind;
  g.g_x2 = Vector::Zero(p);
  switch (kind) {
    case DisturbanceCase::Matched: {
      const Vector a_inv_d1 = linalg::solve_checked(sys.J1(x_star) - sys.R1(x_star), dist.d1, "J1 - R1");
      g.g_x1 = a_inv_d1;
      g.g_zeta = -linalg::solve_checked(b, j12.transpose() * a_inv_d1, "J12^T E");
      break;
    }
    case DisturbanceCase::Unmatched: {
      g.g_x1 = Vector::Zero(m);
      g.g_zeta = -linalg::solve_checked(b, dist.d2, "J12^T E");
      break;
    }
    case DisturbanceCase::Mixed: {
      const Vector a_inv_d1 = linalg::solve_checked(sys.J1(x_star) - sys.R1(x_star), dist.d1, "J1 - R1");
      g.g_x1 = a_inv_d1;
      g.g_zeta = -linalg::solve_checked(b, j12.transpose() * a_inv_d1 + dist.d2, "J12^T E");
      break;
    }
  }
  return g;
}

}  // namespace

CheckReport case_assumptions(const PartitionedPHSystem& sys, const IntegralController& ctl,
                             DisturbanceCase kind, std::uint64_t seed) {
  require(ctl.m() == sys.m() && ctl.p() == sys.p(), "case_assumptions: E must be m x p");
  const auto samples = sample_states(sys.domain(), sys.x_star(), 100, seed);
  const auto structure = validate_structure(sys, samples);
  CheckReport rep;
  rep.seed = seed;

  if (needs_constant_j1_r1(kind)) {
    const double dev = std::max(structure.J1_deviation, structure.R1_deviation);
    rep.add({"A4.J1_R1_constant", dev <= structure.tol, dev, structure.tol, "J1 and R1 constant"});
  }

  const Matrix& E = ctl.E();
  double min_rank = std::numeric_limits<double>::infinity();
  double proj_dev = 0.0;
  const Matrix proj_star = projection(sys.J12(sys.x_star()), E);
  for (const auto& x : samples) {
    const Matrix j12 = sys.J12(x);
    const double r = linalg::rank_ratio(E.transpose() * j12);
    min_rank = std::min(min_rank, r);
    if (r > tol::kRank) proj_dev = std::max(proj_dev, (projection(j12, E) - proj_star).cwiseAbs().maxCoeff());
  }
  const bool invertible = min_rank > tol::kRank;
  // The projection condition is only required in the matched case; with a
  // constant J12 it holds trivially.
  rep.add({"A5.E_T_J12_invertible", invertible, min_rank, tol::kRank, "E^T J12 invertible"});
  if (kind == DisturbanceCase::Matched) {
    rep.add({"A5.E_projection_invariant", invertible && proj_dev <= tol::kGradientIdentity, proj_dev,
             tol::kGradientIdentity, "(J12^T E)^-1 J12^T state independent"});
  }

  if (needs_constant_j12(kind)) {
    rep.add({"A7.J12_constant", structure.J12_constant(), structure.J12_deviation, structure.tol,
             "J12 constant"});
  }
  return rep;
}

EquilibriumGradient equilibrium_gradient(const PartitionedPHSystem& sys, const IntegralController& ctl,
                                         const Disturbance& dist, DisturbanceCase kind,
                                         const std::optional<Vector>& j12_at, std::uint64_t seed) {
  const auto rep = case_assumptions(sys, ctl, kind, seed);
  if (!rep.overall()) {
    std::ostringstream os;
    os << "equilibrium_gradient(" << to_string(kind) << "): assumption check failed:";
    for (const auto& c : rep.checks)
      if (!c.passed) os << ' ' << c.name;
    throw AssumptionError(os.str());
  }
  return gradient_formula(sys, ctl, dist, kind, j12_at.value_or(sys.x_star()));
}

OpenLoopGradient open_loop_gradient_at_equilibrium(const EquilibriumGradient& grad, const Matrix& E) {
  require(E.rows() == grad.g_x1.size() && E.cols() == grad.g_zeta.size(),
          "open_loop_gradient_at_equilibrium: E dimension mismatch");
  return OpenLoopGradient{grad.g_x1 + E * grad.g_zeta, grad.g_x2, -grad.g_zeta};
}

EquilibriumState solve_equilibrium_state(const PartitionedPHSystem& sys, const IntegralController& ctl,
                                         const EquilibriumGradient& grad, const Disturbance& dist) {
  const int m = sys.m();
  const auto open = open_loop_gradient_at_equilibrium(grad, ctl.E());
  const Vector& target = open.dH_dx1;
  const Vector x2 = sys.x2_star();

  auto residual_at = [&](const Vector& x1) -> Vector {
    return sys.H().gradient(sys.join(x1, x2)).head(m) - target;
  };

  constexpr int kMaxIter = 100;
  const double tol = 1e-12 * std::max(1.0, linalg::inf_norm(target));
  Vector x1 = sys.x1_star();
  Vector r = residual_at(x1);
  int it = 0;
  for (; it < kMaxIter && linalg::inf_norm(r) > tol; ++it) {
    const Matrix jac = sys.H().hessian(sys.join(x1, x2)).topLeftCorner(m, m);
    const Vector step = jac.fullPivLu().solve(-r);
    const double phi0 = 0.5 * r.squaredNorm();
    // Directional derivative of phi along the Newton step is -2 phi0.
    double alpha = 1.0;
    Vector trial = x1 + step;
    Vector r_trial = residual_at(trial);
    while (0.5 * r_trial.squaredNorm() > phi0 - 1e-4 * alpha * 2.0 * phi0 && alpha > 1e-10) {
      alpha *= 0.5;
      trial = x1 + alpha * step;
      r_trial = residual_at(trial);
    }
    x1 = std::move(trial);
    r = std::move(r_trial);
  }
  if (linalg::inf_norm(r) > tol) {
    std::ostringstream os;
    os << "solve_equilibrium_state: Newton did not converge in " << kMaxIter
       << " iterations, residual " << linalg::inf_norm(r);
    throw EquilibriumError(os.str(), x1, linalg::inf_norm(r));
  }

  EquilibriumState st;
  st.x1_bar = x1;
  st.x2_star = x2;
  st.zeta_bar = ctl.E().transpose() * x1 - ctl.grad_inverse(open.dHc_dz);
  st.newton_iterations = it;
  const ClosedLoopSystem cl(sys, ctl);
  st.residual = linalg::inf_norm(cl.rhs(st.w(), dist.d1, dist.d2));
  return st;
}

Equilibrium solve_equilibrium(const PartitionedPHSystem& sys, const IntegralController& ctl,
                              const Disturbance& dist, DisturbanceCase kind, std::uint64_t seed) {
  // Validates the case assumptions once.
  Equilibrium eq;
  eq.gradient = equilibrium_gradient(sys, ctl, dist, kind, std::nullopt, seed);
  eq.state = solve_equilibrium_state(sys, ctl, eq.gradient, dist);

  const auto structure = validate_structure(sys, seed);
  if (structure.J12_constant()) return eq;

  constexpr int kMaxOuter = 200;
  constexpr double kDamping = 0.5;
  Vector x1 = eq.state.x1_bar;
  for (int k = 1; k <= kMaxOuter; ++k) {
    const Vector at = sys.join(x1, sys.x2_star());
    auto grad = gradient_formula(sys, ctl, dist, kind, at);
    auto state = solve_equilibrium_state(sys, ctl, grad, dist);
    const double change = linalg::inf_norm(state.x1_bar - x1);
    eq.gradient = std::move(grad);
    eq.state = std::move(state);
    eq.outer_iterations = k + 1;
    if (change <= 1e-10) return eq;
    x1 = x1 + kDamping * (eq.state.x1_bar - x1);
  }
  throw EquilibriumError("solve_equilibrium: fixed-point loop on J12 did not converge", x1,
                         eq.state.residual);
}

Equilibrium solve_equilibrium(const PartitionedPHSystem& sys, const IntegralController& ctl,
                              const Disturbance& dist, std::uint64_t seed) {
  return solve_equilibrium(sys, ctl, dist, classify(dist), seed);
}

}  // namespace phia
