#include <cmath>

#include <doctest.h>

#include "fixtures.hpp"
#include "phia/cbi.hpp"
#include "phia/simulator.hpp"

using namespace phia;
using fx::mat1;
using fx::vec;

namespace {

const Vector kZero1 = Vector::Zero(1);

bool entry_passed(const StructureReport& rep, const std::string& name) {
  const auto* c = rep.checks.find(name);
  REQUIRE(c != nullptr);
  return c->passed;
}

}  // namespace

TEST_CASE("plant_rhs vanishes at the undisturbed minimizer") {
  const auto sys = fx::rlc();
  CHECK(plant_rhs(sys, sys.x_star(), kZero1, Disturbance::none(1, 1), 0.0).norm() == 0.0);
  const auto mech = fx::mechanical_scalar(1, 2, 1, 0.5);
  CHECK(plant_rhs(mech, mech.x_star(), kZero1, Disturbance::none(1, 1), 0.0).norm() == 0.0);
}

TEST_CASE("plant_rhs on the RLC by hand") {
  const auto sys = fx::rlc(1, 1, 1, 1);
  const auto none = Disturbance::none(1, 1);
  CHECK(plant_rhs(sys, vec({0, 1}), kZero1, none, 0.0).norm() == 0.0);
  // grad H = (1, 0), J1 - R1 = -1, J12 = -1
  const Vector f = plant_rhs(sys, vec({1, 1}), kZero1, none, 0.0);
  CHECK(f(0) == doctest::Approx(-1.0));
  CHECK(f(1) == doctest::Approx(1.0));
}

TEST_CASE("plant_rhs: disturbances enter with a minus sign after the step") {
  const auto sys = fx::rlc();
  const Disturbance d = fx::dist(vec({0.3}), vec({0.2}), 1.0);
  CHECK(plant_rhs(sys, sys.x_star(), kZero1, d, 0.5).norm() == 0.0);
  const Vector f = plant_rhs(sys, sys.x_star(), kZero1, d, 1.0);
  CHECK(f(0) == doctest::Approx(-0.3));
  CHECK(f(1) == doctest::Approx(-0.2));
}

TEST_CASE("RLC structure matrix reads [[-R, -1], [1, 0]]") {
  const double R = 2.5;
  const auto sys = fx::rlc(1, 1, R, 1);
  const Vector x = sys.x_star();
  Matrix F(2, 2);
  F << sys.J1(x) - sys.R1(x), sys.J12(x), -sys.J12(x).transpose(), sys.J2(x) - sys.R2(x);
  CHECK(F(0, 0) == -R);
  CHECK(F(0, 1) == -1.0);
  CHECK(F(1, 0) == 1.0);
  CHECK(F(1, 1) == 0.0);
}

TEST_CASE("passive output y = dH/dx1") {
  const auto sys = fx::rlc(2, 1, 1, 1);
  CHECK(passive_output(sys, sys.x_star()).norm() == 0.0);
  CHECK(passive_output(sys, vec({3, 0.4}))(0) == doctest::Approx(1.5));
  CHECK(passive_output(fx::rlc(2, 1, 1, 1), vec({2, 0}))(0) == doctest::Approx(1.0));
  const auto mech = build_mechanical({Matrix::Identity(2, 2), Matrix::Identity(2, 2), Matrix::Identity(2, 2), 1.0,
                                      vec({0, 0})});
  const Vector x = vec({0.7, -0.2, 1.0, 3.0});
  CHECK((passive_output(mech, x) - x.head(2)).norm() < 1e-15);
}

TEST_CASE("regulated output is dH/dx2") {
  const auto sys = fx::rlc(1, 2, 1, 1);
  CHECK(regulated_output(sys, vec({0.0, 2.0}))(0) == doctest::Approx(0.5));
}

TEST_CASE("validate_structure: RLC passes everything") {
  const auto rep = validate_structure(fx::rlc());
  CHECK(rep.passed());
  CHECK(rep.J1_constant());
  CHECK(rep.R1_constant());
  CHECK(rep.J12_constant());
}

TEST_CASE("validate_structure: scalar mechanical system passes") {
  CHECK(validate_structure(fx::mechanical_scalar(1, 2, 1, 0)).passed());
}

TEST_CASE("validate_structure: x1 x2 coupling in H breaks separability") {
  auto f = fx::rlc().fields();
  f.H = HamiltonianFn(
      2, [](const Vector& x) { return 0.5 * x(0) * x(0) + 0.5 * (x(1) - 1) * (x(1) - 1) + 0.1 * x(0) * (x(1) - 1); },
      [](const Vector& x) { return vec({x(0) + 0.1 * (x(1) - 1), (x(1) - 1) + 0.1 * x(0)}); });
  const auto rep = validate_structure(PartitionedPHSystem(f));
  CHECK_FALSE(entry_passed(rep, "structure.H_separable"));
  CHECK(entry_passed(rep, "structure.H_strongly_convex"));
}

TEST_CASE("validate_structure: R1 = 0 is not positive definite") {
  const auto rep = validate_structure(build_lossless_lc({1, 1, 1}));
  CHECK_FALSE(entry_passed(rep, "structure.R1_positive_definite"));
  CHECK_FALSE(entry_passed(rep, "structure.R1_full_rank"));
  CHECK(entry_passed(rep, "structure.J1_skew"));
}

TEST_CASE("validate_structure: non-skew J1 and a false constancy claim are reported") {
  auto f = fx::rlc().fields();
  f.J1 = [](const Vector& x) { return mat1(0.1 * x(0)); };
  f.constant.J1 = true;
  const auto rep = validate_structure(PartitionedPHSystem(f));
  CHECK_FALSE(entry_passed(rep, "structure.J1_skew"));
  CHECK_FALSE(entry_passed(rep, "structure.constancy_claims"));
  CHECK_FALSE(rep.J1_constant());
}

TEST_CASE("validate_structure: non-convex H") {
  auto f = fx::rlc().fields();
  f.H = HamiltonianFn::quadratic((Matrix(2, 2) << 1, 0, 0, -1).finished(), f.x_star);
  CHECK_FALSE(entry_passed(validate_structure(PartitionedPHSystem(f)), "structure.H_strongly_convex"));
}

TEST_CASE("validate_structure is deterministic for a seed") {
  const auto a = validate_structure(fx::mechanical_scalar(), 42);
  const auto b = validate_structure(fx::mechanical_scalar(), 42);
  REQUIRE(a.checks.checks.size() == b.checks.checks.size());
  for (std::size_t i = 0; i < a.checks.checks.size(); ++i) CHECK(a.checks.checks[i].value == b.checks.checks[i].value);
}

TEST_CASE("state samples: random points, the reference, then the corners") {
  const StateBox box = StateBox::around(vec({0, 1}), 0.5);
  const auto s = sample_states(box, vec({0, 1}), 10, 3);
  REQUIRE(s.size() == 10 + 1 + 4);
  for (const auto& x : s) CHECK(box.contains(x));
  CHECK(s[10] == vec({0, 1}));
}

TEST_CASE("PartitionedPHSystem refuses inconsistent dimensions") {
  auto f = fx::rlc().fields();
  f.p = 2;
  CHECK_THROWS_AS(PartitionedPHSystem{f}, ContractViolation);
  auto g = fx::rlc().fields();
  g.x_star = vec({0, 1, 2});
  CHECK_THROWS_AS(PartitionedPHSystem{g}, ContractViolation);
}

TEST_CASE("builders refuse non-physical parameters") {
  CHECK_THROWS_AS(build_rlc({0, 1, 1, 1}), ContractViolation);
  CHECK_THROWS_AS(build_rlc({1, -1, 1, 1}), ContractViolation);
  CHECK_THROWS_AS(build_rlc({1, 1, 0, 1}), ContractViolation);
  CHECK_THROWS_AS(build_mechanical({mat1(-1), mat1(1), mat1(1), 1, vec({0})}), ContractViolation);
  CHECK_THROWS_AS(build_mechanical({mat1(1), mat1(0), mat1(1), 1, vec({0})}), ContractViolation);
  CHECK_THROWS_AS(build_mechanical({mat1(1), mat1(1), mat1(0), 1, vec({0})}), ContractViolation);
  CHECK_THROWS_AS(build_mechanical({mat1(1), mat1(1), mat1(1), 0, vec({0})}), ContractViolation);
}

TEST_CASE("mechanical builder: J12 = -K^T, H = p^T M^-1 p / 2 + k |q - q*|^2 / 2") {
  const Matrix M = (Matrix(2, 2) << 2, 0.5, 0.5, 1).finished();
  const Matrix K = (Matrix(1, 2) << 1, 2).finished();
  const auto sys = build_mechanical({M, Matrix::Identity(2, 2), K, 3.0, vec({0.5})});
  CHECK(sys.m() == 2);
  CHECK(sys.p() == 1);
  CHECK((sys.J12(sys.x_star()) + K.transpose()).norm() == 0.0);
  const Vector x = vec({0.3, -0.4, 1.5});
  const Vector p = x.head(2);
  const double want = 0.5 * p.dot(M.inverse() * p) + 1.5 * 1.0 * 1.0;
  CHECK(sys.H().value(x) == doctest::Approx(want).epsilon(1e-13));
}

TEST_CASE("feedthrough structure: CbI controller matrices pass") {
  std::mt19937_64 rng(5);
  const Matrix J1 = fx::random_skew(3, rng);
  const Matrix R1 = fx::random_pd(3, rng);
  const Matrix E = fx::random_full_rank(3, 2, rng);
  const CbIController c(J1, R1, E, HamiltonianFn::quadratic(Matrix::Identity(2, 2)));
  const std::vector<Vector> samples{Vector::Zero(2), vec({1, -1})};
  CHECK(check_feedthrough_structure(c.as_feedthrough(), samples));
}

TEST_CASE("feedthrough structure: P = 0, S = -I violates the dissipation condition") {
  const FeedthroughPHSystem sys{constant_field(Matrix::Zero(1, 1)), constant_field(mat1(1.0)),
                                constant_field(mat1(1.0)),          constant_field(mat1(0.0)),
                                constant_field(mat1(0.0)),          constant_field(mat1(-1.0)),
                                HamiltonianFn::quadratic(mat1(1.0))};
  CHECK_FALSE(check_feedthrough_structure(sys, {vec({0.0})}));
}

TEST_CASE("feedthrough structure: symmetric M violates the skew condition") {
  const FeedthroughPHSystem sys{constant_field(Matrix::Zero(1, 1)), constant_field(mat1(1.0)),
                                constant_field(mat1(1.0)),          constant_field(mat1(0.0)),
                                constant_field(mat1(1.0)),          constant_field(mat1(1.0)),
                                HamiltonianFn::quadratic(mat1(1.0))};
  CHECK_FALSE(check_feedthrough_structure(sys, {vec({0.0})}));
}

TEST_CASE("unforced plant: H is non-increasing") {
  const auto sys = fx::mechanical_scalar(1, 0.5, 2, 0);
  IntegratorConfig cfg;
  cfg.t_final = 20;
  const auto traj = simulate_plant(
      sys, [](double, const Vector&) { return Vector::Zero(1); }, Disturbance::none(1, 1), vec({1.0, 0.5}), cfg);
  for (std::size_t k = 0; k + 1 < traj.size(); ++k) CHECK(traj.H[k + 1] <= traj.H[k] + 1e-12);
}

TEST_CASE("power balance: H(t2) - H(t1) <= integral of u^T y") {
  const auto sys = fx::rlc(1, 1, 0.5, 1);
  IntegratorConfig cfg;
  cfg.t_final = 10;
  cfg.rtol = 1e-10;
  cfg.atol = 1e-12;
  cfg.dt_max = 0.01;
  const InputLaw input = [](double t, const Vector&) { return vec({std::sin(2 * t)}); };
  const auto traj = simulate_plant(sys, input, Disturbance::none(1, 1), vec({0.2, 0.4}), cfg);
  // Supply rate integrated with the trapezoidal rule on the accepted steps.
  double supplied = 0.0;
  double dissipated = 0.0;
  for (std::size_t k = 0; k + 1 < traj.size(); ++k) {
    const Vector ya = passive_output(sys, traj.states[k]);
    const Vector yb = passive_output(sys, traj.states[k + 1]);
    const double h = traj.times[k + 1] - traj.times[k];
    supplied += 0.5 * h * (traj.inputs[k].dot(ya) + traj.inputs[k + 1].dot(yb));
    dissipated += 0.5 * h * 0.5 * (ya.squaredNorm() + yb.squaredNorm());
  }
  const double stored = traj.H.back() - traj.H.front();
  CHECK(stored <= supplied + 1e-5);
  // Balance closes with the resistor loss R |y|^2.
  CHECK(std::abs(stored - (supplied - dissipated)) < 1e-4);
  CHECK(dissipated > 1e-2);
}
