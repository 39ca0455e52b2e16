#include "phia/ph_system.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <utility>

namespace phia {

StateBox StateBox::around(const Vector& center, double half_width) {
  return StateBox{center.array() - half_width, center.array() + half_width};
}

bool StateBox::contains(const Vector& x) const {
  if (x.size() != lower.size()) return false;
  return (x.array() >= lower.array()).all() && (x.array() <= upper.array()).all();
}

std::vector<Vector> sample_states(const StateBox& box, const Vector& reference, int n_random,
                                  std::uint64_t seed) {
  require(box.lower.size() == box.upper.size(), "StateBox: bounds dimension mismatch");
  require(reference.size() == box.lower.size(), "sample_states: reference dimension mismatch");
  require((box.lower.array() <= box.upper.array()).all(), "StateBox: lower > upper");
  const int n = box.dim();
  std::vector<Vector> out;
  out.reserve(static_cast<std::size_t>(n_random) + 1);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int k = 0; k < n_random; ++k) {
    Vector x(n);
    for (int i = 0; i < n; ++i) x(i) = box.lower(i) + unit(rng) * (box.upper(i) - box.lower(i));
    out.push_back(std::move(x));
  }
  out.push_back(reference);
  if (n <= 10) {
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
      Vector c(n);
      for (int i = 0; i < n; ++i) c(i) = (mask >> i) & 1u ? box.upper(i) : box.lower(i);
      out.push_back(std::move(c));
    }
  }
  return out;
}

PartitionedPHSystem::PartitionedPHSystem(Fields f) : f_(std::move(f)) {
  require(f_.m > 0 && f_.p > 0, "PartitionedPHSystem: m and p must be positive");
  require(f_.p <= f_.m, "PartitionedPHSystem: requires p <= m");
  require(f_.J1 && f_.J12 && f_.J2 && f_.R1 && f_.R2, "PartitionedPHSystem: missing matrix field");
  require(f_.H.dim() == n(), "PartitionedPHSystem: Hamiltonian dimension must be m + p");
  require(f_.x_star.size() == n(), "PartitionedPHSystem: x_star dimension must be m + p");
  if (f_.domain.lower.size() == 0) f_.domain = StateBox::around(f_.x_star, 1.0);
  require(f_.domain.dim() == n(), "PartitionedPHSystem: domain dimension must be m + p");
  // Shape check at the reference state.
  J1(f_.x_star);
  J12(f_.x_star);
  J2(f_.x_star);
  R1(f_.x_star);
  R2(f_.x_star);
}

Matrix PartitionedPHSystem::eval(const MatrixField& fn, const Vector& x, int rows, int cols,
                                 const char* what) const {
  require(x.size() == n(), std::string("PartitionedPHSystem: state dimension mismatch evaluating ") + what);
  Matrix out = fn(x);
  if (out.rows() != rows || out.cols() != cols) {
    throw ContractViolation(std::string("PartitionedPHSystem: ") + what + " must be " +
                            std::to_string(rows) + "x" + std::to_string(cols) + ", got " +
                            std::to_string(out.rows()) + "x" + std::to_string(out.cols()));
  }
  return out;
}

Vector PartitionedPHSystem::join(const Vector& x1, const Vector& x2) const {
  require(x1.size() == m() && x2.size() == p(), "PartitionedPHSystem::join: dimension mismatch");
  return linalg::concat({&x1, &x2});
}

Disturbance Disturbance::none(int m, int p) {
  return Disturbance{Vector::Zero(m), Vector::Zero(p), 0.0};
}

Vector plant_rhs(const PartitionedPHSystem& sys, const Vector& x, const Vector& u,
                 const Disturbance& dist, double t) {
  const int m = sys.m();
  const int p = sys.p();
  require(x.size() == sys.n(), "plant_rhs: state dimension mismatch");
  require(u.size() == m, "plant_rhs: input dimension mismatch");
  require(dist.d1.size() == m && dist.d2.size() == p, "plant_rhs: disturbance dimension mismatch");
  const Vector g = sys.H().gradient(x);
  const Vector g1 = g.head(m);
  const Vector g2 = g.tail(p);
  const Matrix j12 = sys.J12(x);
  Vector dx(sys.n());
  dx.head(m) = (sys.J1(x) - sys.R1(x)) * g1 + j12 * g2 + u - dist.d1_at(t);
  dx.tail(p) = -j12.transpose() * g1 + (sys.J2(x) - sys.R2(x)) * g2 - dist.d2_at(t);
  return dx;
}

Vector passive_output(const PartitionedPHSystem& sys, const Vector& x) {
  require(x.size() == sys.n(), "passive_output: state dimension mismatch");
  return sys.H().gradient(x).head(sys.m());
}

Vector regulated_output(const PartitionedPHSystem& sys, const Vector& x) {
  require(x.size() == sys.n(), "regulated_output: state dimension mismatch");
  return sys.H().gradient(x).tail(sys.p());
}

namespace {

CheckEntry at_most(std::string name, double value, double threshold, std::string anchor) {
  return CheckEntry{std::move(name), value <= threshold, value, threshold, std::move(anchor), false};
}

CheckEntry greater_than(std::string name, double value, double threshold, std::string anchor) {
  return CheckEntry{std::move(name), value > threshold, value, threshold, std::move(anchor), false};
}

CheckEntry at_least(std::string name, double value, double threshold, std::string anchor) {
  return CheckEntry{std::move(name), value >= threshold, value, threshold, std::move(anchor), false};
}

}  // namespace

StructureReport validate_structure(const PartitionedPHSystem& sys, const std::vector<Vector>& samples,
                                   double tol) {
  require(!samples.empty(), "validate_structure: at least one sample state is required");
  const int m = sys.m();
  const int p = sys.p();

  double j1_skew = 0, j2_skew = 0, r1_sym = 0, r2_sym = 0;
  double r1_min_eig = std::numeric_limits<double>::infinity();
  double r2_min_eig = std::numeric_limits<double>::infinity();
  double j12_rank = std::numeric_limits<double>::infinity();
  double r1_rank = std::numeric_limits<double>::infinity();
  double cross = 0, h_sym = 0;
  double h_min_eig = std::numeric_limits<double>::infinity();

  StructureReport rep;
  rep.tol = tol;
  const Matrix j1_ref = sys.J1(samples.front());
  const Matrix r1_ref = sys.R1(samples.front());
  const Matrix j12_ref = sys.J12(samples.front());

  for (const auto& x : samples) {
    require(x.size() == sys.n(), "validate_structure: sample dimension mismatch");
    const Matrix j1 = sys.J1(x);
    const Matrix j2 = sys.J2(x);
    const Matrix r1 = sys.R1(x);
    const Matrix r2 = sys.R2(x);
    const Matrix j12 = sys.J12(x);
    const Matrix hess = sys.H().hessian(x);

    j1_skew = std::max(j1_skew, linalg::skew_defect(j1));
    j2_skew = std::max(j2_skew, linalg::skew_defect(j2));
    r1_sym = std::max(r1_sym, linalg::symmetry_defect(r1));
    r2_sym = std::max(r2_sym, linalg::symmetry_defect(r2));
    r1_min_eig = std::min(r1_min_eig, linalg::min_symmetric_eigenvalue(r1));
    r2_min_eig = std::min(r2_min_eig, linalg::min_symmetric_eigenvalue(r2));
    j12_rank = std::min(j12_rank, linalg::rank_ratio(j12));
    r1_rank = std::min(r1_rank, linalg::rank_ratio(r1));
    cross = std::max(cross, hess.block(0, m, m, p).cwiseAbs().maxCoeff());
    h_sym = std::max(h_sym, linalg::symmetry_defect(hess));
    h_min_eig = std::min(h_min_eig, linalg::min_symmetric_eigenvalue(hess));

    rep.J1_deviation = std::max(rep.J1_deviation, (j1 - j1_ref).cwiseAbs().maxCoeff());
    rep.R1_deviation = std::max(rep.R1_deviation, (r1 - r1_ref).cwiseAbs().maxCoeff());
    rep.J12_deviation = std::max(rep.J12_deviation, (j12 - j12_ref).cwiseAbs().maxCoeff());
  }

  // Finite-difference Hessians carry truncation error; analytic ones do not.
  const double hess_tol = sys.H().has_analytic_hessian() ? tol : std::max(tol, 1e-6);

  auto& c = rep.checks;
  c.add(at_most("structure.J1_skew", j1_skew, tol::kStructure, "J1 = -J1^T"));
  c.add(at_most("structure.J2_skew", j2_skew, tol::kStructure, "J2 = -J2^T"));
  c.add(at_most("structure.R1_symmetric", r1_sym, tol::kStructure, "R1 = R1^T"));
  c.add(at_most("structure.R2_symmetric", r2_sym, tol::kStructure, "R2 = R2^T"));
  c.add(greater_than("structure.R1_positive_definite", r1_min_eig, 0.0, "R1 > 0"));
  c.add(at_least("structure.R2_positive_semidefinite", r2_min_eig, -tol::kStructure, "R2 >= 0"));
  c.add(greater_than("structure.J12_full_rank", j12_rank, tol, "J12 full rank"));
  c.add(greater_than("structure.R1_full_rank", r1_rank, tol, "R1 full rank"));
  c.add(at_most("structure.H_separable", cross, hess_tol, "no x1-x2 cross terms in H"));
  c.add(at_most("structure.H_hessian_symmetric", h_sym, tol::kStructure, "Hessian symmetry"));
  c.add(at_least("structure.H_strongly_convex", h_min_eig, tol::kConvexity, "H strongly convex"));
  c.add(at_most("structure.x_star_stationary",
                linalg::inf_norm(sys.H().gradient(sys.x_star())), 1e-8, "grad H(x*) = 0"));

  const auto& claims = sys.claimed_constant();
  double claim_dev = 0.0;
  if (claims.J1) claim_dev = std::max(claim_dev, rep.J1_deviation);
  if (claims.R1) claim_dev = std::max(claim_dev, rep.R1_deviation);
  if (claims.J12) claim_dev = std::max(claim_dev, rep.J12_deviation);
  c.add(at_most("structure.constancy_claims", claim_dev, tol, "declared constant matrices"));
  return rep;
}

StructureReport validate_structure(const PartitionedPHSystem& sys, std::uint64_t seed) {
  auto rep = validate_structure(sys, sample_states(sys.domain(), sys.x_star(), 100, seed));
  rep.checks.seed = seed;
  return rep;
}

Vector FeedthroughPHSystem::state_rhs(const Vector& x, const Vector& u) const {
  const Vector g = H.gradient(x);
  return (J(x) - R(x)) * g + (G(x) - P(x)) * u;
}

Vector FeedthroughPHSystem::output(const Vector& x, const Vector& u) const {
  const Vector g = H.gradient(x);
  return (G(x) + P(x)).transpose() * g + (M(x) + S(x)) * u;
}

bool check_feedthrough_structure(const FeedthroughPHSystem& sys, const std::vector<Vector>& samples,
                                 double tol) {
  for (const auto& x : samples) {
    const Matrix j = sys.J(x), r = sys.R(x), g = sys.G(x), p = sys.P(x), m = sys.M(x), s = sys.S(x);
    const auto n = j.rows();
    const auto k = g.cols();
    require(j.cols() == n && r.rows() == n && r.cols() == n && g.rows() == n && p.rows() == n &&
                p.cols() == k && m.rows() == k && m.cols() == k && s.rows() == k && s.cols() == k,
            "check_feedthrough_structure: incompatible block dimensions");

    Matrix dissipative(n + k, n + k);
    dissipative << r, p, p.transpose(), s;
    if (linalg::symmetry_defect(dissipative) > tol) return false;
    if (linalg::min_symmetric_eigenvalue(dissipative) < -tol) return false;

    Matrix conservative(n + k, n + k);
    conservative << -j, -g, g.transpose(), m;
    if (linalg::skew_defect(conservative) > tol) return false;
  }
  return true;
}

}  // namespace phia
