#include "phia/controller.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <utility>

namespace phia {

Vector newton_gradient_inverse(const HamiltonianFn& h, const Vector& v) {
  require(v.size() == h.dim(), "newton_gradient_inverse: dimension mismatch");
  constexpr int kMaxIter = 50;
  constexpr double kTol = 1e-12;
  Vector z = Vector::Zero(h.dim());
  Vector r = h.gradient(z) - v;
  for (int it = 0; it < kMaxIter; ++it) {
    if (linalg::inf_norm(r) <= kTol) return z;
    const Vector step = h.hessian(z).ldlt().solve(-r);
    double alpha = 1.0;
    const double r0 = r.squaredNorm();
    Vector trial = z + step;
    Vector r_trial = h.gradient(trial) - v;
    while (r_trial.squaredNorm() > (1.0 - 1e-4 * alpha) * r0 && alpha > 1e-8) {
      alpha *= 0.5;
      trial = z + alpha * step;
      r_trial = h.gradient(trial) - v;
    }
    z = std::move(trial);
    r = std::move(r_trial);
  }
  if (linalg::inf_norm(r) <= kTol) return z;
  std::ostringstream os;
  os << "gradient inverse did not converge, residual " << linalg::inf_norm(r);
  throw NumericalError(os.str());
}

IntegralController::IntegralController(Matrix E, HamiltonianFn Hc, GradInverse grad_inverse)
    : E_(std::move(E)), Hc_(std::move(Hc)), grad_inverse_(std::move(grad_inverse)) {
  require(E_.rows() > 0 && E_.cols() > 0, "IntegralController: E must be non-empty");
  require(Hc_.dim() == E_.cols(), "IntegralController: Hc dimension must equal columns of E");
}

IntegralController IntegralController::quadratic(Matrix E, const Matrix& Kc) {
  require(Kc.rows() == E.cols() && Kc.cols() == E.cols(), "IntegralController: Kc must be p x p");
  require(linalg::symmetry_defect(Kc) <= tol::kStructure, "IntegralController: Kc must be symmetric");
  require(linalg::min_symmetric_eigenvalue(Kc) > 0.0, "IntegralController: Kc must be positive definite");
  const Matrix inv = Kc.inverse();
  return IntegralController(std::move(E), HamiltonianFn::quadratic(inv),
                            [Kc](const Vector& v) -> Vector { return Kc * v; });
}

Vector IntegralController::grad_inverse(const Vector& v) const {
  require(v.size() == p(), "IntegralController::grad_inverse: dimension mismatch");
  if (grad_inverse_) return grad_inverse_(v);
  return newton_gradient_inverse(Hc_, v);
}

CheckReport IntegralController::validate(std::uint64_t seed) const {
  CheckReport rep;
  rep.seed = seed;
  const double rank = linalg::rank_ratio(E_);
  rep.add({"controller.E_full_rank", rank > tol::kRank, rank, tol::kRank, "E full rank"});

  const StateBox box = StateBox::around(Vector::Zero(p()), 1.0);
  const auto samples = sample_states(box, Vector::Zero(p()), 20, seed);
  double roundtrip = 0.0;
  double min_eig = std::numeric_limits<double>::infinity();
  for (const auto& z : samples) {
    const Vector v = Hc_.gradient(z);
    roundtrip = std::max(roundtrip, linalg::inf_norm(Hc_.gradient(grad_inverse(v)) - v));
    min_eig = std::min(min_eig, linalg::min_symmetric_eigenvalue(Hc_.hessian(z)));
  }
  rep.add({"controller.grad_inverse", roundtrip <= tol::kGradientIdentity, roundtrip,
           tol::kGradientIdentity, "grad_z Hc invertible"});
  rep.add({"controller.Hc_strictly_convex", min_eig > 0.0, min_eig, 0.0, "Hc strictly convex"});
  return rep;
}

Matrix default_E(const PartitionedPHSystem& sys) { return sys.J12(sys.x_star()); }

Vector control_law(const PartitionedPHSystem& sys, const IntegralController& ctl, const Vector& x1,
                   const Vector& x2, const Vector& zeta) {
  require(ctl.m() == sys.m() && ctl.p() == sys.p(), "control_law: E must be m x p");
  require(zeta.size() == sys.p(), "control_law: controller state dimension mismatch");
  const Vector x = sys.join(x1, x2);
  return (sys.J1(x) - sys.R1(x)) * ctl.E() * ctl.Hc().gradient(ctl.z(x1, zeta));
}

Vector controller_rhs(const PartitionedPHSystem& sys, const IntegralController& ctl, const Vector& x1,
                      const Vector& x2) {
  require(ctl.m() == sys.m() && ctl.p() == sys.p(), "controller_rhs: E must be m x p");
  const Vector x = sys.join(x1, x2);
  return ctl.E().transpose() * sys.J12(x) * regulated_output(sys, x);
}

Vector feedback_rhs(const PartitionedPHSystem& sys, const IntegralController& ctl, const Vector& w,
                    const Disturbance& dist, double t) {
  const int m = sys.m();
  const int p = sys.p();
  require(w.size() == m + 2 * p, "feedback_rhs: state dimension mismatch");
  const Vector x1 = w.head(m);
  const Vector x2 = w.segment(m, p);
  const Vector zeta = w.tail(p);
  Vector dw(w.size());
  dw.head(m + p) = plant_rhs(sys, w.head(m + p), control_law(sys, ctl, x1, x2, zeta), dist, t);
  dw.tail(p) = controller_rhs(sys, ctl, x1, x2);
  return dw;
}

namespace {

HamiltonianFn closed_loop_hamiltonian(const PartitionedPHSystem& sys, const IntegralController& ctl) {
  const int m = sys.m();
  const int p = sys.p();
  const int n = m + p;
  // z = C^T w with C = [E; 0; -I].
  Matrix C = Matrix::Zero(n + p, p);
  C.topRows(m) = ctl.E();
  C.bottomRows(p) = -Matrix::Identity(p, p);
  const HamiltonianFn H = sys.H();
  const HamiltonianFn Hc = ctl.Hc();
  return HamiltonianFn(
      n + p,
      [H, Hc, C, n](const Vector& w) {
        return H.value(w.head(n)) + Hc.value(C.transpose() * w);
      },
      [H, Hc, C, n](const Vector& w) -> Vector {
        Vector g = C * Hc.gradient(C.transpose() * w);
        g.head(n) += H.gradient(w.head(n));
        return g;
      },
      [H, Hc, C, n](const Vector& w) -> Matrix {
        Matrix hess = C * Hc.hessian(C.transpose() * w) * C.transpose();
        hess.topLeftCorner(n, n) += H.hessian(w.head(n));
        return hess;
      });
}

}  // namespace

ClosedLoopSystem::ClosedLoopSystem(PartitionedPHSystem sys, IntegralController ctl)
    : sys_(std::move(sys)), ctl_(std::move(ctl)), Hcl_(closed_loop_hamiltonian(sys_, ctl_)) {
  require(ctl_.m() == sys_.m() && ctl_.p() == sys_.p(), "ClosedLoopSystem: E must be m x p");
}

Vector ClosedLoopSystem::join(const Vector& x1, const Vector& x2, const Vector& zeta) const {
  require(x1.size() == m() && x2.size() == p() && zeta.size() == p(),
          "ClosedLoopSystem::join: dimension mismatch");
  return linalg::concat({&x1, &x2, &zeta});
}

Matrix ClosedLoopSystem::F(const Vector& w) const {
  require(w.size() == dim(), "ClosedLoopSystem::F: state dimension mismatch");
  const int m = this->m();
  const int p = this->p();
  const Vector x = plant_state(w);
  const Matrix j12 = sys_.J12(x);
  const Matrix& E = ctl_.E();
  Matrix f = Matrix::Zero(dim(), dim());
  f.block(0, 0, m, m) = sys_.J1(x) - sys_.R1(x);
  f.block(0, m, m, p) = j12;
  f.block(m, 0, p, m) = -j12.transpose();
  f.block(m, m, p, p) = sys_.J2(x) - sys_.R2(x);
  f.block(m, m + p, p, p) = -j12.transpose() * E;
  f.block(m + p, m, p, p) = E.transpose() * j12;
  return f;
}

Vector ClosedLoopSystem::rhs(const Vector& w, const Vector& d1, const Vector& d2) const {
  require(d1.size() == m() && d2.size() == p(), "ClosedLoopSystem::rhs: disturbance dimension mismatch");
  Vector dw = F(w) * Hcl_.gradient(w);
  dw.head(m()) -= d1;
  dw.segment(m(), p()) -= d2;
  return dw;
}

Vector ClosedLoopSystem::rhs(const Vector& w, const Disturbance& dist, double t) const {
  return rhs(w, dist.d1_at(t), dist.d2_at(t));
}

Vector ClosedLoopSystem::input(const Vector& w) const {
  require(w.size() == dim(), "ClosedLoopSystem::input: state dimension mismatch");
  return control_law(sys_, ctl_, w.head(m()), w.segment(m(), p()), zeta(w));
}

Vector ClosedLoopSystem::undisturbed_equilibrium() const {
  const Vector x1 = sys_.x1_star();
  const Vector z0 = ctl_.grad_inverse(Vector::Zero(p()));
  const Vector zeta = ctl_.E().transpose() * x1 - z0;
  return join(x1, sys_.x2_star(), zeta);
}

namespace {

std::string failed_names(const CheckReport& rep) {
  std::ostringstream os;
  bool first = true;
  for (const auto& c : rep.checks) {
    if (c.passed) continue;
    os << (first ? "" : ", ") << c.name << " (measured " << c.value << ", threshold " << c.threshold
       << ")";
    first = false;
  }
  return os.str();
}

}  // namespace

ClosedLoopSystem assemble_closed_loop(const PartitionedPHSystem& sys, const IntegralController& ctl,
                                      std::uint64_t seed) {
  require(ctl.m() == sys.m() && ctl.p() == sys.p(), "assemble_closed_loop: E must be m x p");
  const auto structure = validate_structure(sys, seed);
  if (!structure.passed())
    throw AssumptionError("assemble_closed_loop: plant structure check failed: " +
                          failed_names(structure.checks));
  const auto ctl_report = ctl.validate(seed);
  if (!ctl_report.overall())
    throw AssumptionError("assemble_closed_loop: controller check failed: " + failed_names(ctl_report));
  return ClosedLoopSystem(sys, ctl);
}

PassiveIAClosedLoop::PassiveIAClosedLoop(PartitionedPHSystem sys, Matrix KI, HamiltonianFn Hc)
    : sys_(std::move(sys)),
      KI_(std::move(KI)),
      Hc_(std::move(Hc)),
      Hcl_(HamiltonianFn(1, [](const Vector&) { return 0.0; },
                         [](const Vector&) -> Vector { return Vector::Zero(1); })) {
  const int m = sys_.m();
  const int n = sys_.n();
  require(KI_.rows() == m && KI_.cols() == m, "PassiveIAClosedLoop: KI must be m x m");
  require(Hc_.dim() == m, "PassiveIAClosedLoop: Hc must have dimension m");
  const HamiltonianFn H = sys_.H();
  const HamiltonianFn Hc_copy = Hc_;
  Hcl_ = HamiltonianFn(
      n + m,
      [H, Hc_copy, n, m](const Vector& w) { return H.value(w.head(n)) + Hc_copy.value(w.tail(m)); },
      [H, Hc_copy, n, m](const Vector& w) -> Vector {
        Vector g(n + m);
        g.head(n) = H.gradient(w.head(n));
        g.tail(m) = Hc_copy.gradient(w.tail(m));
        return g;
      },
      [H, Hc_copy, n, m](const Vector& w) -> Matrix {
        return linalg::block_diag(H.hessian(w.head(n)), Hc_copy.hessian(w.tail(m)));
      });
}

Matrix PassiveIAClosedLoop::structure(const Vector& w) const {
  require(w.size() == dim(), "PassiveIAClosedLoop: state dimension mismatch");
  const int m = sys_.m();
  const int p = sys_.p();
  const Vector x = w.head(sys_.n());
  const Matrix j12 = sys_.J12(x);
  Matrix f = Matrix::Zero(dim(), dim());
  f.block(0, 0, m, m) = sys_.J1(x) - sys_.R1(x);
  f.block(0, m, m, p) = j12;
  f.block(0, m + p, m, m) = -KI_.transpose();
  f.block(m, 0, p, m) = -j12.transpose();
  f.block(m, m, p, p) = sys_.J2(x) - sys_.R2(x);
  f.block(m + p, 0, m, m) = KI_;
  return f;
}

Vector PassiveIAClosedLoop::rhs(const Vector& w, const Disturbance& dist, double t) const {
  Vector dw = structure(w) * Hcl_.gradient(w);
  dw.head(sys_.m()) -= dist.d1_at(t);
  dw.segment(sys_.m(), sys_.p()) -= dist.d2_at(t);
  return dw;
}

Vector PassiveIAClosedLoop::input(const Vector& w) const {
  require(w.size() == dim(), "PassiveIAClosedLoop: state dimension mismatch");
  return -KI_.transpose() * Hc_.gradient(w.tail(sys_.m()));
}

PassiveIAClosedLoop passive_ia_closed_loop(const PartitionedPHSystem& sys, const Matrix& KI,
                                           const HamiltonianFn& Hc,
                                           const std::optional<MatrixField>& G1, std::uint64_t seed) {
  require(KI.rows() == sys.m() && KI.cols() == sys.m(), "passive_ia_closed_loop: KI must be m x m");
  if (linalg::rank_ratio(KI) <= tol::kRank)
    throw AssumptionError("passive_ia_closed_loop: KI is rank deficient");
  if (G1) {
    for (const auto& x : sample_states(sys.domain(), sys.x_star(), 100, seed)) {
      const Matrix g = (*G1)(x);
      require(g.rows() == sys.m() && g.cols() == sys.m(), "passive_ia_closed_loop: G1 must be m x m");
      if (linalg::rank_ratio(g) <= tol::kRank)
        throw AssumptionError("passive_ia_closed_loop: G1 is singular at a sampled state");
    }
  }
  return PassiveIAClosedLoop(sys, KI, Hc);
}

Matrix left_annihilator(const Matrix& J12) {
  const auto m = J12.rows();
  const auto p = J12.cols();
  require(p <= m, "left_annihilator: J12 must have at least as many rows as columns");
  Eigen::JacobiSVD<Matrix> svd(J12, Eigen::ComputeFullU);
  const auto rank = svd.rank();
  const Matrix& U = svd.matrixU();
  Matrix out(m - rank, m);
  // Null-space basis vectors of J12^T, highest singular-vector index first.
  for (Eigen::Index k = 0; k < m - rank; ++k) {
    Vector row = U.col(m - 1 - k);
    for (Eigen::Index i = 0; i < m; ++i) {
      if (std::abs(row(i)) > 1e-12) {
        if (row(i) < 0) row = -row;
        break;
      }
    }
    out.row(k) = row.transpose();
  }
  return out;
}

ExtendedSystem dynamic_extension(const PartitionedPHSystem& sys, std::uint64_t seed) {
  const int m = sys.m();
  const int p = sys.p();
  if (p >= m) throw AssumptionError("dynamic_extension: requires dim x2 < dim x1");
  const auto structure = validate_structure(sys, seed);
  if (!structure.J12_constant()) throw AssumptionError("dynamic_extension: J12 must be constant");
  const Matrix j12 = sys.J12(sys.x_star());
  if (linalg::rank_ratio(j12) <= tol::kRank)
    throw AssumptionError("dynamic_extension: J12 is rank deficient");

  const int k = m - p;
  const Matrix perp = left_annihilator(j12);
  Matrix j12_tilde(m, m);
  j12_tilde << j12, perp.transpose();

  const int n = m + p;
  const auto& f = sys.fields();
  auto plant_part = [n](const Vector& xt) -> Vector { return xt.head(n); };
  const MatrixField J1 = f.J1, R1 = f.R1, J2 = f.J2, R2 = f.R2;
  const HamiltonianFn H = f.H;

  Vector x_star(n + k);
  x_star << sys.x_star(), Vector::Zero(k);
  StateBox domain{Vector(n + k), Vector(n + k)};
  domain.lower << sys.domain().lower, Vector::Constant(k, -1.0);
  domain.upper << sys.domain().upper, Vector::Constant(k, 1.0);

  HamiltonianFn h_ext(
      n + k, [H, n, k](const Vector& xt) { return H.value(xt.head(n)) + 0.5 * xt.tail(k).squaredNorm(); },
      [H, n, k](const Vector& xt) -> Vector {
        Vector g(n + k);
        g.head(n) = H.gradient(xt.head(n));
        g.tail(k) = xt.tail(k);
        return g;
      },
      [H, n, k](const Vector& xt) -> Matrix {
        return linalg::block_diag(H.hessian(xt.head(n)), Matrix::Identity(k, k));
      });

  PartitionedPHSystem::Fields ext{
      .m = m,
      .p = m,
      .J1 = [J1, plant_part](const Vector& xt) { return J1(plant_part(xt)); },
      .J12 = constant_field(j12_tilde),
      .J2 = [J2, plant_part, k](const Vector& xt) {
        return linalg::block_diag(J2(plant_part(xt)), Matrix::Zero(k, k));
      },
      .R1 = [R1, plant_part](const Vector& xt) { return R1(plant_part(xt)); },
      .R2 = [R2, plant_part, k](const Vector& xt) {
        return linalg::block_diag(R2(plant_part(xt)), Matrix::Zero(k, k));
      },
      .H = h_ext,
      .x_star = x_star,
      .domain = domain,
      .constant = {f.constant.J1, f.constant.R1, true},
      .name = f.name + "+extension",
  };
  return ExtendedSystem{PartitionedPHSystem(std::move(ext)), perp, j12_tilde,
                        linalg::condition_number(j12_tilde)};
}

Disturbance extend_disturbance(const Disturbance& dist, int extra) {
  Disturbance out = dist;
  out.d2 = Vector::Zero(dist.d2.size() + extra);
  out.d2.head(dist.d2.size()) = dist.d2;
  return out;
}

}  // namespace phia
