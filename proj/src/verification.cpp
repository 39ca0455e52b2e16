#include "phia/verification.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "phia/cbi.hpp"

namespace phia {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

CheckEntry renamed(const CheckEntry& e, const std::string& name) {
  CheckEntry out = e;
  out.name = name;
  return out;
}

}  // namespace

CheckReport check_assumptions(const PartitionedPHSystem& sys, const IntegralController& ctl,
                              const Disturbance& dist, DisturbanceCase kind, std::uint64_t seed) {
  CheckReport rep;
  rep.seed = seed;
  const auto structure = validate_structure(sys, seed);
  const auto& s = structure.checks;

  for (const char* name : {"structure.J1_skew", "structure.J2_skew", "structure.R1_symmetric",
                           "structure.R2_symmetric", "structure.R1_positive_definite",
                           "structure.R2_positive_semidefinite", "structure.x_star_stationary",
                           "structure.constancy_claims"}) {
    const std::string n(name);
    rep.add(renamed(*s.find(n), "A0." + n.substr(n.find('.') + 1)));
  }

  const auto* j12 = s.find("structure.J12_full_rank");
  const auto* r1 = s.find("structure.R1_full_rank");
  const double rank = std::min(j12->value, r1->value);
  rep.add({"A1.J12_R1_full_rank", j12->passed && r1->passed, rank, j12->threshold, "J12 and R1 full rank"});
  rep.add(renamed(*s.find("structure.H_separable"), "A2.H_separable"));
  rep.add(renamed(*s.find("structure.H_strongly_convex"), "A3.H_strongly_convex"));

  rep.append(case_assumptions(sys, ctl, kind, seed));
  rep.append(ctl.validate(seed));

  const char* existence = kind == DisturbanceCase::Matched     ? "A6.matched_equilibrium_exists"
                          : kind == DisturbanceCase::Unmatched ? "A8.unmatched_equilibrium_exists"
                                                               : "A9.mixed_equilibrium_exists";
  double residual = kInf;
  try {
    residual = solve_equilibrium(sys, ctl, dist, kind, seed).state.residual;
  } catch (const std::exception&) {
    residual = kInf;
  }
  rep.add({existence, residual <= tol::kEquilibriumResidual, residual, tol::kEquilibriumResidual,
           "unique equilibrium x1 exists"});
  rep.sort();
  return rep;
}

double worst_lyapunov_violation(const Trajectory& traj, double t_from) {
  double worst = 0.0;
  for (std::size_t k = 0; k + 1 < traj.W.size(); ++k) {
    if (traj.times[k] < t_from) continue;
    worst = std::max(worst, traj.W[k + 1] - traj.W[k]);
  }
  return worst;
}

CheckReport check_lyapunov_monotone(const Trajectory& traj, double slack_per_step, double t_from) {
  CheckReport rep;
  const double worst = worst_lyapunov_violation(traj, t_from);
  rep.add({"lyapunov.monotone", worst <= slack_per_step, worst, slack_per_step,
           "W non-increasing along closed-loop trajectories"});
  return rep;
}

CheckReport check_convergence(const Trajectory& traj, const EquilibriumState& target, double tol) {
  require(!traj.empty(), "check_convergence: empty trajectory");
  CheckReport rep;
  const Vector& w = traj.terminal_state();
  const Vector w_bar = target.w();
  if (w_bar.size() == w.size()) {
    const double gap = linalg::inf_norm(w - w_bar);
    rep.add({"convergence.state", gap <= tol, gap, tol, "trajectory converges to the predicted equilibrium"});
  }
  require(target.x2_star.size() == traj.p, "check_convergence: x2 dimension mismatch");
  const double x2_gap = linalg::inf_norm(w.segment(traj.m, traj.p) - target.x2_star);
  rep.add({"convergence.x2_regulation", x2_gap <= tol, x2_gap, tol, "x2 regulated to x2*"});
  return rep;
}

CbIGap cbi_trajectory_gap(const PartitionedPHSystem& sys, const IntegralController& ctl,
                          const Disturbance& dist, const Vector& w0, const IntegratorConfig& cfg) {
  const ClosedLoopSystem cl(sys, ctl);
  const TransformedClosedLoop tl(sys, ctl);
  const Matrix& E = ctl.E();
  // Both runs are integrated well below the comparison tolerance.
  IntegratorConfig run_cfg = with_disturbance_breakpoint(cfg, dist);
  run_cfg.rtol = std::min(run_cfg.rtol, 1e-10);
  run_cfg.atol = std::min(run_cfg.atol, 1e-12);

  const Solution a = integrate([&](double t, const Vector& w) { return cl.rhs(w, dist, t); }, w0, run_cfg);
  const Solution b =
      integrate([&](double t, const Vector& wt) { return tl.rhs(wt, dist, t); }, cbi_transform(w0, E), run_cfg);

  CbIGap gap;
  for (std::size_t k = 0; k < a.times.size(); ++k) {
    const Vector other = cbi_untransform(interpolate(b.times, b.states, b.rates, b.rates_left, a.times[k]), E);
    gap.original = std::max(gap.original, linalg::inf_norm(a.states[k] - other));
  }
  for (std::size_t k = 0; k < b.times.size(); ++k) {
    const Vector other = cbi_transform(interpolate(a.times, a.states, a.rates, a.rates_left, b.times[k]), E);
    gap.transformed = std::max(gap.transformed, linalg::inf_norm(b.states[k] - other));
  }
  return gap;
}

CheckReport check_cbi_equivalence(const PartitionedPHSystem& sys, const IntegralController& ctl,
                                  const Disturbance& dist, const Vector& w0, const IntegratorConfig& cfg,
                                  double tol) {
  const auto gap = cbi_trajectory_gap(sys, ctl, dist, w0, cfg);
  CheckReport rep;
  rep.add({"cbi.equivalence", gap.original <= tol, gap.original, tol,
           "closed loop equals its interconnection form under z = E^T x1 - zeta"});
  rep.add({"cbi.equivalence_transformed", gap.transformed <= tol, gap.transformed, tol,
           "same comparison in transformed coordinates"});
  return rep;
}

CheckReport check_gradient_consistency(const HamiltonianFn& H, const std::vector<Vector>& samples,
                                       double tol) {
  double grad_err = 0.0;
  double hess_err = 0.0;
  double hess_sym = 0.0;
  for (const auto& x : samples) {
    const Vector g = H.gradient(x);
    const Vector g_fd = H.finite_difference_gradient(x);
    grad_err = std::max(grad_err, linalg::inf_norm(g_fd - g) / std::max(1.0, linalg::inf_norm(g)));
    const Matrix h = H.hessian(x);
    hess_sym = std::max(hess_sym, linalg::symmetry_defect(h));
    if (H.has_analytic_hessian()) {
      const Matrix h_fd = H.finite_difference_hessian(x);
      hess_err = std::max(hess_err, (h_fd - h).cwiseAbs().maxCoeff() / std::max(1.0, h.cwiseAbs().maxCoeff()));
    }
  }
  CheckReport rep;
  rep.add({"gradient.finite_difference", grad_err <= tol, grad_err, tol, "analytic gradient matches value"});
  rep.add({"hessian.finite_difference", hess_err <= tol, hess_err, tol, "analytic Hessian matches gradient"});
  rep.add({"hessian.symmetric", hess_sym <= tol::kStructure, hess_sym, tol::kStructure, "Hessian symmetry"});
  return rep;
}

std::vector<Vector> closed_loop_samples(const ClosedLoopSystem& cl, int n, std::uint64_t seed) {
  const auto& sys = cl.plant();
  const auto plant = sample_states(sys.domain(), sys.x_star(), n, seed);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::vector<Vector> out;
  out.reserve(plant.size());
  for (const auto& x : plant) {
    Vector zeta = cl.controller().E().transpose() * x.head(sys.m());
    for (Eigen::Index i = 0; i < zeta.size(); ++i) zeta(i) += unit(rng);
    Vector w(cl.dim());
    w << x, zeta;
    out.push_back(std::move(w));
  }
  return out;
}

CheckReport check_assembly(const ClosedLoopSystem& cl, const Disturbance& dist,
                           const std::vector<Vector>& samples) {
  const int m = cl.m();
  const int p = cl.p();
  const int n = m + p;
  const auto& sys = cl.plant();
  const auto& ctl = cl.controller();
  const double t = std::max(dist.step_time, 0.0);
  double rhs_gap = 0.0;
  double grad_gap = 0.0;
  double split_gap = 0.0;
  for (const auto& w : samples) {
    const Vector assembled = cl.rhs(w, dist, t);
    const Vector direct = feedback_rhs(sys, ctl, w, dist, t);
    rhs_gap = std::max(rhs_gap, linalg::inf_norm(assembled - direct) / std::max(1.0, linalg::inf_norm(direct)));

    const Vector g_cl = cl.Hcl().gradient(w);
    const Vector g = sys.H().gradient(w.head(n));
    const Vector g_c = ctl.Hc().gradient(ctl.z(w.head(m), w.tail(p)));
    Vector recovered(n + p);
    recovered << g_cl.head(m) + ctl.E() * g_cl.tail(p), g_cl.segment(m, p), -g_cl.tail(p);
    Vector expected(n + p);
    expected << g, g_c;
    grad_gap = std::max(grad_gap, linalg::inf_norm(recovered - expected) / std::max(1.0, linalg::inf_norm(expected)));

    const Matrix f = cl.F(w);
    const Vector x = w.head(n);
    Matrix diss = Matrix::Zero(n + p, n + p);
    diss.block(0, 0, m, m) = -2.0 * sys.R1(x);
    diss.block(m, m, p, p) = -2.0 * sys.R2(x);
    split_gap = std::max(split_gap, (f + f.transpose() - diss).cwiseAbs().maxCoeff());
  }
  CheckReport rep;
  rep.add({"assembly.closed_loop_identity", rhs_gap <= tol::kAlgebraic, rhs_gap, tol::kAlgebraic,
           "F grad Hcl - d equals plant with control law"});
  rep.add({"assembly.gradient_identity", grad_gap <= tol::kGradientIdentity, grad_gap,
           tol::kGradientIdentity, "closed-loop / open-loop gradient relation"});
  rep.add({"assembly.dissipation_split", split_gap <= tol::kAlgebraic, split_gap, tol::kAlgebraic,
           "F + F^T = diag(-2 R1, -2 R2, 0)"});
  return rep;
}

CheckReport check_assembly(const PassiveIAClosedLoop& cl, const Disturbance& dist,
                           const std::vector<Vector>& samples) {
  const auto& sys = cl.plant();
  const int n = sys.n();
  const double t = std::max(dist.step_time, 0.0);
  Rhs assembled = [&](double tt, const Vector& w) { return cl.rhs(w, dist, tt); };
  Rhs direct = [&](double tt, const Vector& w) {
    const Vector x = w.head(n);
    Vector out(w.size());
    out << plant_rhs(sys, x, cl.input(w), dist, tt), cl.KI() * passive_output(sys, x);
    return out;
  };
  CheckReport rep;
  rep.add(check_rhs_agreement("assembly.closed_loop_identity", "passive-output integral action closed loop",
                              assembled, direct, samples, t));
  return rep;
}

CheckEntry check_rhs_agreement(const std::string& name, const std::string& anchor, const Rhs& a, const Rhs& b,
                               const std::vector<Vector>& samples, double t, double tol) {
  double gap = 0.0;
  for (const auto& w : samples) {
    const Vector fa = a(t, w);
    const Vector fb = b(t, w);
    gap = std::max(gap, linalg::inf_norm(fa - fb) / std::max(1.0, linalg::inf_norm(fb)));
  }
  return {name, gap <= tol, gap, tol, anchor};
}

std::vector<Vector> augmented_samples(const PartitionedPHSystem& sys, int zeta_dim, int n, std::uint64_t seed) {
  const auto plant = sample_states(sys.domain(), sys.x_star(), n, seed);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::vector<Vector> out;
  for (const auto& x : plant) {
    Vector w(x.size() + zeta_dim);
    w.head(x.size()) = x;
    for (int i = 0; i < zeta_dim; ++i) w(x.size() + i) = unit(rng);
    out.push_back(std::move(w));
  }
  return out;
}

}  // namespace phia
