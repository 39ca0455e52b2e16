#include <cmath>

#include <doctest.h>

#include "fixtures.hpp"
#include "phia/equilibrium.hpp"
#include "phia/simulator.hpp"

using namespace phia;
using fx::mat1;
using fx::vec;

namespace {

IntegralController rlc_controller(const PartitionedPHSystem& sys, double La = 1.0) {
  return IntegralController::quadratic(default_E(sys), mat1(La));
}

}  // namespace

TEST_CASE("disturbance classification") {
  CHECK(classify(fx::dist(vec({1}), vec({0}))) == DisturbanceCase::Matched);
  CHECK(classify(fx::dist(vec({0}), vec({1}))) == DisturbanceCase::Unmatched);
  CHECK(classify(fx::dist(vec({1}), vec({1}))) == DisturbanceCase::Mixed);
  CHECK(disturbance_case_from_string("mixed") == DisturbanceCase::Mixed);
  CHECK(to_string(DisturbanceCase::Unmatched) == "unmatched");
  CHECK_THROWS_AS(disturbance_case_from_string("both"), ContractViolation);
}

TEST_CASE("zero disturbance gives a zero gradient in every case") {
  const auto sys = fx::rlc();
  const auto ctl = rlc_controller(sys);
  for (auto kind : {DisturbanceCase::Matched, DisturbanceCase::Unmatched, DisturbanceCase::Mixed}) {
    const auto g = equilibrium_gradient(sys, ctl, Disturbance::none(1, 1), kind);
    CHECK(g.g_x1.norm() == 0.0);
    CHECK(g.g_x2.norm() == 0.0);
    CHECK(g.g_zeta.norm() == 0.0);
  }
}

TEST_CASE("RLC matched gradient and open-loop gradient") {
  const auto sys = fx::rlc();
  const auto ctl = rlc_controller(sys);
  const auto g = equilibrium_gradient(sys, ctl, fx::dist(vec({0.3}), vec({0})), DisturbanceCase::Matched);
  CHECK(g.g_x1(0) == doctest::Approx(-0.3));
  CHECK(g.g_zeta(0) == doctest::Approx(-0.3));
  const auto open = open_loop_gradient_at_equilibrium(g, ctl.E());
  CHECK(std::abs(open.dH_dx1(0)) < 1e-15);
  CHECK(open.dH_dx2.norm() == 0.0);
  CHECK(open.dHc_dz(0) == doctest::Approx(0.3));
}

TEST_CASE("RLC unmatched gradient and open-loop gradient") {
  const auto sys = fx::rlc();
  const auto ctl = rlc_controller(sys);
  const auto g = equilibrium_gradient(sys, ctl, fx::dist(vec({0}), vec({0.2})), DisturbanceCase::Unmatched);
  CHECK(g.g_x1.norm() == 0.0);
  CHECK(g.g_zeta(0) == doctest::Approx(-0.2));
  const auto open = open_loop_gradient_at_equilibrium(g, ctl.E());
  CHECK(open.dH_dx1(0) == doctest::Approx(0.2));
}

TEST_CASE("zero open-loop gradient in, zero out") {
  const EquilibriumGradient g{Vector::Zero(2), Vector::Zero(1), Vector::Zero(1), DisturbanceCase::Mixed};
  const auto open = open_loop_gradient_at_equilibrium(g, (Matrix(2, 1) << 1, 2).finished());
  CHECK(open.dH_dx1.norm() == 0.0);
  CHECK(open.dHc_dz.norm() == 0.0);
}

TEST_CASE("mixed gradient against the closed form") {
  std::mt19937_64 rng(4);
  const auto sys = fx::random_square(2, rng);
  const auto ctl = IntegralController::quadratic(fx::random_full_rank(2, 2, rng), Matrix::Identity(2, 2));
  const Vector d1 = vec({0.3, -0.1});
  const Vector d2 = vec({0.2, 0.4});
  const Vector xs = sys.x_star();
  const Matrix A = sys.J1(xs) - sys.R1(xs);
  const Matrix B = sys.J12(xs).transpose() * ctl.E();
  const Vector gx1 = A.inverse() * d1;
  const Vector gz = -B.inverse() * (sys.J12(xs).transpose() * gx1 + d2);
  const auto g = equilibrium_gradient(sys, ctl, fx::dist(d1, d2), DisturbanceCase::Mixed);
  CHECK((g.g_x1 - gx1).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((g.g_zeta - gz).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("undisturbed equilibrium is (x1*, x2*, E^T x1*)") {
  const auto sys = fx::mechanical_scalar(1, 1, 1, 0.4);
  const auto ctl = rlc_controller(sys);
  const auto eq = solve_equilibrium(sys, ctl, Disturbance::none(1, 1), DisturbanceCase::Matched);
  CHECK(eq.state.x1_bar.norm() < 1e-15);
  CHECK(eq.state.x2_star(0) == doctest::Approx(0.4));
  CHECK(eq.state.zeta_bar.norm() < 1e-15);
}

TEST_CASE("RLC unmatched equilibrium by hand: x1 = L d2, z = La d2") {
  for (double L : {1.0, 2.0}) {
    for (double La : {1.0, 0.5}) {
      const auto sys = fx::rlc(L, 1, 1, 1);
      const auto ctl = rlc_controller(sys, La);
      const auto eq = solve_equilibrium(sys, ctl, fx::dist(vec({0}), vec({0.2})), DisturbanceCase::Unmatched);
      CHECK(eq.state.x1_bar(0) == doctest::Approx(L * 0.2).epsilon(1e-12));
      const double z = ctl.z(eq.state.x1_bar, eq.state.zeta_bar)(0);
      CHECK(z == doctest::Approx(La * 0.2).epsilon(1e-12));
      CHECK(eq.state.zeta_bar(0) == doctest::Approx(-L * 0.2 - La * 0.2).epsilon(1e-12));
      CHECK(eq.state.residual <= 1e-8);
    }
  }
}

TEST_CASE("mechanical matched equilibrium by hand; steady input cancels the disturbance") {
  // D = 2, d1 = 1, E = J12 = -1: p = 0, q = q*, z = d1 / D = 0.5, zeta = E^T p - z = -0.5.
  const auto sys = fx::mechanical_scalar(1, 2, 1, 0);
  const auto ctl = rlc_controller(sys);
  const Disturbance d = fx::dist(vec({1}), vec({0}), 0.0);
  const auto eq = solve_equilibrium(sys, ctl, d, DisturbanceCase::Matched);
  CHECK(std::abs(eq.state.x1_bar(0)) < 1e-14);
  CHECK(std::abs(eq.state.x2_star(0)) < 1e-14);
  CHECK(eq.state.zeta_bar(0) == doctest::Approx(-0.5));
  const ClosedLoopSystem cl(sys, ctl);
  // u = (J1 - R1) E dHc/dz = (-2)(-1)(0.5) = +1 = d1.
  CHECK(cl.input(eq.state.w())(0) == doctest::Approx(1.0));

  IntegratorConfig cfg;
  cfg.t_final = 200;
  const auto traj = simulate_closed_loop(cl, d, cl.undisturbed_equilibrium(), cfg);
  CHECK((traj.terminal_state() - eq.state.w()).cwiseAbs().maxCoeff() <= 1e-5);
  CHECK(traj.inputs.back()(0) == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("solved equilibria are rest points that regulate x2") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 6; ++trial) {
    const int m = 1 + trial % 3;
    const auto sys = fx::random_square(m, rng);
    const auto ctl = IntegralController::quadratic(default_E(sys), fx::random_pd(m, rng));
    const Disturbance d = fx::dist(Vector::Random(m), Vector::Random(m), 0.0);
    for (auto kind : {DisturbanceCase::Mixed}) {
      const auto eq = solve_equilibrium(sys, ctl, d, kind);
      CHECK(eq.state.residual <= 1e-8);
      CHECK((eq.state.x2_star - sys.x2_star()).cwiseAbs().maxCoeff() <= 1e-8);
      const ClosedLoopSystem cl(sys, ctl);
      CHECK(cl.rhs(eq.state.w(), d, 0.0).cwiseAbs().maxCoeff() <= 1e-8);
    }
  }
}

TEST_CASE("gradient round trip through the closed/open-loop identity") {
  std::mt19937_64 rng(22);
  const auto sys = fx::random_square(2, rng);
  const auto ctl = IntegralController::quadratic(default_E(sys), Matrix::Identity(2, 2));
  const auto eq = solve_equilibrium(sys, ctl, fx::dist(vec({0.2, 0.1}), vec({-0.3, 0.4})), DisturbanceCase::Mixed);
  const ClosedLoopSystem cl(sys, ctl);
  const Vector g = cl.Hcl().gradient(eq.state.w());
  CHECK((g.head(2) - eq.gradient.g_x1).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(g.segment(2, 2).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((g.tail(2) - eq.gradient.g_zeta).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("Newton with line search on a non-quadratic Hamiltonian") {
  auto f = fx::rlc().fields();
  // dH/dx1 = sinh(x1) + x1 is strongly monotone but far from linear.
  f.H = HamiltonianFn(
      2, [](const Vector& x) { return std::cosh(x(0)) + 0.5 * x(0) * x(0) + 0.5 * (x(1) - 1) * (x(1) - 1); },
      [](const Vector& x) { return vec({std::sinh(x(0)) + x(0), x(1) - 1}); });
  const PartitionedPHSystem sys(f);
  const auto ctl = rlc_controller(sys);
  const auto eq = solve_equilibrium(sys, ctl, fx::dist(vec({0}), vec({3.0})), DisturbanceCase::Unmatched);
  CHECK(std::sinh(eq.state.x1_bar(0)) + eq.state.x1_bar(0) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(eq.state.residual <= 1e-8);
}

TEST_CASE("state-dependent J12: fixed-point loop converges in the matched case") {
  auto f = fx::rlc().fields();
  f.J12 = [](const Vector& x) { return mat1(-1.0 - 0.2 * std::tanh(x(0))); };
  f.constant.J12 = false;
  const PartitionedPHSystem sys(f);
  const auto ctl = rlc_controller(sys);
  const Disturbance d = fx::dist(vec({0.3}), vec({0}));
  const auto eq = solve_equilibrium(sys, ctl, d, DisturbanceCase::Matched);
  CHECK(eq.state.residual <= 1e-8);
  CHECK(std::abs(eq.state.x2_star(0) - 1.0) <= 1e-8);
}

TEST_CASE("case assumptions: unmatched needs constant J12") {
  auto f = fx::rlc().fields();
  f.J12 = [](const Vector& x) { return mat1(-1.0 - 0.2 * std::tanh(x(0))); };
  f.constant.J12 = false;
  const PartitionedPHSystem sys(f);
  const auto rep = case_assumptions(sys, rlc_controller(sys), DisturbanceCase::Unmatched);
  CHECK_FALSE(rep.find("A7.J12_constant")->passed);
  CHECK_THROWS_AS(equilibrium_gradient(sys, rlc_controller(sys), fx::dist(vec({0}), vec({0.1})),
                                       DisturbanceCase::Unmatched),
                  AssumptionError);
}

TEST_CASE("singular E^T J12 is refused") {
  const Matrix J12 = Matrix::Identity(2, 2);
  const auto sys = fx::linear(Matrix::Zero(2, 2), J12, Matrix::Zero(2, 2), Matrix::Identity(2, 2),
                              Matrix::Zero(2, 2), Matrix::Identity(4, 4), vec({0, 0, 1, 1}));
  const auto ctl = IntegralController::quadratic(Matrix::Identity(2, 2), Matrix::Identity(2, 2));
  CHECK(case_assumptions(sys, ctl, DisturbanceCase::Mixed).overall());
  // A full-rank E can only make E^T J12 singular when J12 is tall.
  const Matrix J12t = (Matrix(3, 1) << 1, 0, 0).finished();
  const auto tall = fx::linear(Matrix::Zero(3, 3), J12t, Matrix::Zero(1, 1), Matrix::Identity(3, 3),
                               Matrix::Zero(1, 1), Matrix::Identity(4, 4), vec({0, 0, 0, 1}));
  const auto bad = IntegralController::quadratic((Matrix(3, 1) << 0, 1, 0).finished(), mat1(1.0));
  CHECK_FALSE(case_assumptions(tall, bad, DisturbanceCase::Unmatched).find("A5.E_T_J12_invertible")->passed);
  CHECK_THROWS_AS(solve_equilibrium(tall, bad, fx::dist(Vector::Zero(3), vec({0.1})), DisturbanceCase::Unmatched),
                  AssumptionError);
}
