#include "phia/cbi.hpp"

#include <utility>

namespace phia {

Vector cbi_transform(const Vector& w, const Matrix& E) {
  const auto m = E.rows();
  const auto p = E.cols();
  require(w.size() >= m + p, "cbi_transform: state too short for E");
  Vector out = w;
  out.tail(p) = E.transpose() * w.head(m) - w.tail(p);
  return out;
}

Vector cbi_untransform(const Vector& wt, const Matrix& E) {
  const auto m = E.rows();
  const auto p = E.cols();
  require(wt.size() >= m + p, "cbi_untransform: state too short for E");
  Vector out = wt;
  out.tail(p) = E.transpose() * wt.head(m) - wt.tail(p);
  return out;
}

TransformedClosedLoop::TransformedClosedLoop(PartitionedPHSystem sys, IntegralController ctl)
    : sys_(std::move(sys)), ctl_(std::move(ctl)) {
  require(ctl_.m() == sys_.m() && ctl_.p() == sys_.p(), "TransformedClosedLoop: E must be m x p");
}

Matrix TransformedClosedLoop::structure(const Vector& wt) const {
  require(wt.size() == dim(), "TransformedClosedLoop: state dimension mismatch");
  const int m = sys_.m();
  const int p = sys_.p();
  const Vector x = wt.head(sys_.n());
  const Matrix a = sys_.J1(x) - sys_.R1(x);
  const Matrix j12 = sys_.J12(x);
  const Matrix& E = ctl_.E();
  Matrix f = Matrix::Zero(dim(), dim());
  f.block(0, 0, m, m) = a;
  f.block(0, m, m, p) = j12;
  f.block(0, m + p, m, p) = a * E;
  f.block(m, 0, p, m) = -j12.transpose();
  f.block(m, m, p, p) = sys_.J2(x) - sys_.R2(x);
  f.block(m + p, 0, p, m) = E.transpose() * a;
  f.block(m + p, m + p, p, p) = E.transpose() * a * E;
  return f;
}

Vector TransformedClosedLoop::rhs(const Vector& wt, const Disturbance& dist, double t) const {
  const int m = sys_.m();
  const int p = sys_.p();
  const int n = sys_.n();
  Vector grad(dim());
  grad.head(n) = sys_.H().gradient(wt.head(n));
  grad.tail(p) = ctl_.Hc().gradient(wt.tail(p));
  const Vector d1 = dist.d1_at(t);
  Vector dw = structure(wt) * grad;
  dw.head(m) -= d1;
  dw.segment(m, p) -= dist.d2_at(t);
  dw.tail(p) -= ctl_.E().transpose() * d1;
  return dw;
}

CbIController::CbIController(Matrix J1, Matrix R1, Matrix E, HamiltonianFn Hc)
    : J1_(std::move(J1)), R1_(std::move(R1)), E_(std::move(E)), Hc_(std::move(Hc)) {
  require(J1_.rows() == E_.rows() && J1_.cols() == E_.rows(), "CbIController: J1 must be m x m");
  require(R1_.rows() == E_.rows() && R1_.cols() == E_.rows(), "CbIController: R1 must be m x m");
  require(Hc_.dim() == E_.cols(), "CbIController: Hc must have dimension p");
}

ControllerOutput CbIController::rhs(const Vector& z, const Vector& u_c, const Vector& d1) const {
  require(z.size() == E_.cols() && u_c.size() == E_.rows() && d1.size() == E_.rows(),
          "CbIController::rhs: dimension mismatch");
  const Matrix a = J1_ - R1_;
  const Vector g = Hc_.gradient(z);
  return ControllerOutput{
      E_.transpose() * a * E_ * g + E_.transpose() * a * u_c - E_.transpose() * d1,
      -a * E_ * g + R1_ * u_c,
  };
}

FeedthroughPHSystem CbIController::as_feedthrough() const {
  const Matrix& E = E_;
  const auto m = E.rows();
  return FeedthroughPHSystem{
      constant_field(E.transpose() * J1_ * E),
      constant_field(E.transpose() * R1_ * E),
      constant_field(E.transpose() * J1_),
      constant_field(E.transpose() * R1_),
      constant_field(Matrix::Zero(m, m)),
      constant_field(R1_),
      Hc_,
  };
}

CbIController make_cbi_controller(const PartitionedPHSystem& sys, const IntegralController& ctl,
                                  std::uint64_t seed) {
  const auto structure = validate_structure(sys, seed);
  if (!structure.J1_constant() || !structure.R1_constant())
    throw AssumptionError("make_cbi_controller: J1 and R1 must be constant");
  const Vector& x = sys.x_star();
  return CbIController(sys.J1(x), sys.R1(x), ctl.E(), ctl.Hc());
}

PartitionedPHSystem with_r1(const PartitionedPHSystem& sys, const Matrix& r1) {
  auto f = sys.fields();
  f.R1 = constant_field(r1);
  f.constant.R1 = true;
  return PartitionedPHSystem(std::move(f));
}

CbIInterconnection::CbIInterconnection(const PartitionedPHSystem& sys, CbIController ctrl)
    : lossless_(with_r1(sys, Matrix::Zero(sys.m(), sys.m()))), ctrl_(std::move(ctrl)) {
  require(ctrl_.E().rows() == sys.m() && ctrl_.E().cols() == sys.p(),
          "CbIInterconnection: controller dimension mismatch");
}

Vector CbIInterconnection::input(const Vector& wt, double t, const Disturbance& dist) const {
  const int n = lossless_.n();
  const Vector x = wt.head(n);
  const auto out = ctrl_.rhs(wt.tail(lossless_.p()), passive_output(lossless_, x), dist.d1_at(t));
  return -out.y_c;
}

Vector CbIInterconnection::rhs(const Vector& wt, const Disturbance& dist, double t) const {
  require(wt.size() == dim(), "CbIInterconnection: state dimension mismatch");
  const int n = lossless_.n();
  const Vector x = wt.head(n);
  const Vector y = passive_output(lossless_, x);
  const auto out = ctrl_.rhs(wt.tail(lossless_.p()), y, dist.d1_at(t));
  Vector dw(dim());
  dw.head(n) = plant_rhs(lossless_, x, -out.y_c, dist, t);
  dw.tail(lossless_.p()) = out.z_dot;
  return dw;
}

TildeController::TildeController(Matrix J1, Matrix J12, Matrix Rd, HamiltonianFn Hc)
    : J1_(std::move(J1)), J12_(std::move(J12)), Rd_(std::move(Rd)), Hc_(std::move(Hc)) {
  const auto m = J12_.rows();
  require(J1_.rows() == m && J1_.cols() == m, "TildeController: J1 must be m x m");
  require(Rd_.rows() == m && Rd_.cols() == m, "TildeController: Rd must be m x m");
  require(Hc_.dim() == J12_.cols(), "TildeController: Hc must have dimension p");
}

ControllerOutput TildeController::rhs(const Vector& z, const Vector& u_c) const {
  require(z.size() == J12_.cols() && u_c.size() == J12_.rows(),
          "TildeController::rhs: dimension mismatch");
  const Matrix a = J1_ - Rd_;
  const Vector g = Hc_.gradient(z);
  return ControllerOutput{
      J12_.transpose() * a * J12_ * g + J12_.transpose() * a * u_c,
      -a * J12_ * g + Rd_ * u_c,
  };
}

TildeController cbi_tilde_controller(const Matrix& J1, const Matrix& J12, const Matrix& Rd,
                                     const HamiltonianFn& Hc) {
  require(Rd.rows() == Rd.cols(), "cbi_tilde_controller: Rd must be square");
  if (linalg::symmetry_defect(Rd) > tol::kStructure || linalg::min_symmetric_eigenvalue(Rd) <= 0.0)
    throw AssumptionError("cbi_tilde_controller: Rd must be symmetric positive definite");
  return TildeController(J1, J12, Rd, Hc);
}

TildeInterconnection::TildeInterconnection(const PartitionedPHSystem& sys, TildeController ctrl,
                                           std::uint64_t seed)
    : sys_(sys), ctrl_(std::move(ctrl)) {
  require(ctrl_.J12().rows() == sys.m() && ctrl_.J12().cols() == sys.p(),
          "TildeInterconnection: controller dimension mismatch");
  const auto samples = sample_states(sys.domain(), sys.x_star(), 100, seed);
  double r1 = 0.0;
  for (const auto& x : samples) r1 = std::max(r1, sys.R1(x).cwiseAbs().maxCoeff());
  if (r1 > tol::kStructure) throw AssumptionError("TildeInterconnection: plant must have R1 = 0");
  const auto structure = validate_structure(sys, samples);
  if (!structure.J12_constant() || !structure.J1_constant())
    throw AssumptionError("TildeInterconnection: J1 and J12 must be constant");
}

Vector TildeInterconnection::input(const Vector& wt) const {
  const Vector x = wt.head(sys_.n());
  return -ctrl_.rhs(wt.tail(sys_.p()), passive_output(sys_, x)).y_c;
}

Vector TildeInterconnection::rhs(const Vector& wt, const Disturbance& dist, double t) const {
  require(wt.size() == dim(), "TildeInterconnection: state dimension mismatch");
  const int n = sys_.n();
  const Vector x = wt.head(n);
  const auto out = ctrl_.rhs(wt.tail(sys_.p()), passive_output(sys_, x));
  Vector dw(dim());
  dw.head(n) = plant_rhs(sys_, x, -out.y_c, dist, t);
  dw.tail(sys_.p()) = out.z_dot;
  return dw;
}

ClosedLoopSystem TildeInterconnection::equivalent_closed_loop() const {
  return ClosedLoopSystem(with_r1(sys_, ctrl_.Rd()), IntegralController(ctrl_.J12(), ctrl_.Hc()));
}

}  // namespace phia
