// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <type_traits>

#include "phia/cbi.hpp"
#include "phia/runner.hpp"
#include "phia/verification.hpp"

using namespace phia;
namespace fs = std::filesystem;

// The output-feedback controller cannot read x2: its state equation takes z and u_c only.
static_assert(std::is_same_v<decltype(&TildeController::rhs),
                             ControllerOutput (TildeController::*)(const Vector&, const Vector&) const>);

namespace {

const fs::path kDir = PHIA_SCENARIO_DIR;

int failures = 0;

void verdict(int n, bool ok, const std::string& detail) {
  std::printf("%s criterion %d: %s\n", ok ? "PASS" : "FAIL", n, detail.c_str());
  if (!ok) ++failures;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

struct Timed {
  RunResult result;
  double seconds = 0.0;
};

Timed run(const Scenario& s) {
  RunOptions o;
  o.write_outputs = false;
  const auto t0 = std::chrono::steady_clock::now();
  Timed t{run_scenario(s, o), 0.0};
  t.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return t;
}

double entry(const RunResult& r, const std::string& name) {
  const auto* e = r.report.find(name);
  return e ? e->value : std::numeric_limits<double>::quiet_NaN();
}

bool passed(const RunResult& r, const std::string& name) {
  const auto* e = r.report.find(name);
  return e && e->passed;
}

// |x2 - x2*|_inf at the horizon.
double x2_error(const RunResult& r) {
  const auto& w = r.trajectory.terminal_state();
  return (w.segment(r.trajectory.m, r.trajectory.p) - r.target->x2_star).cwiseAbs().maxCoeff();
}

Matrix random_skew(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Matrix a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = g(rng);
  return a - a.transpose();
}

Matrix random_pd(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Matrix a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = g(rng);
  return a * a.transpose() + 0.1 * Matrix::Identity(n, n);
}

Matrix random_full_rank(int r, int c, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  for (;;) {
    Matrix a(r, c);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) a(i, j) = g(rng);
    if (linalg::rank_ratio(a) > 1e-3) return a;
  }
}

}  // namespace

int main() {
  std::map<std::string, Scenario> scenarios;
  for (const auto& e : fs::directory_iterator(kDir))
    if (e.path().extension() == ".json") scenarios.emplace(e.path().stem().string(), load_scenario(e.path().string()));
  std::map<std::string, Timed> runs;
  for (const auto& [name, s] : scenarios) runs.emplace(name, run(s));

  // 1. Matched disturbance.
  {
    const auto& t = runs.at("rlc_matched");
    const auto& r = t.result;
    const double err = x2_error(r);
    const double x1 = std::abs(r.target->x1_bar(0));
    const double res = r.target->residual;
    verdict(1, r.exit_code == 0 && err <= 1e-5 && x1 <= 1e-12 && res <= 1e-8 && t.seconds < 5.0,
            "RLC matched d1=0.3: |x2-x2*|=" + num(err) + ", |x1_bar|=" + num(x1) + ", residual=" + num(res) +
                ", runtime=" + num(t.seconds) + " s");
  }

  // 2. Unmatched disturbance: x1_bar = L d2, z_bar = La d2.
  {
    const auto& s = scenarios.at("rlc_unmatched");
    const auto& r = runs.at("rlc_unmatched").result;
    const double L = std::get<RlcParams>(s.system.params).L;
    const double La = 1.0;
    const double d2 = s.disturbance.d2(0);
    const double err = x2_error(r);
    const double x1 = std::abs(r.target->x1_bar(0) - L * d2);
    const auto ctl = build_controller(s, build_system(s).plant);
    const double zerr = std::abs(ctl.z(r.target->x1_bar, r.target->zeta_bar)(0) - La * d2);
    verdict(2, r.exit_code == 0 && err <= 1e-5 && x1 <= 1e-8 && zerr <= 1e-8,
            "RLC unmatched d2=0.2: |x2-x2*|=" + num(err) + ", |x1_bar-L d2|=" + num(x1) + ", |z_bar-La d2|=" +
                num(zerr));
  }

  // 3. Mixed disturbance.
  {
    const auto& r = runs.at("rlc_mixed").result;
    const double err = x2_error(r);
    const double gap = entry(r, "equilibrium.gradient_formula");
    verdict(3, r.exit_code == 0 && err <= 1e-5 && gap <= 1e-10,
            "RLC mixed: |x2-x2*|=" + num(err) + ", equilibrium gradient vs closed form=" + num(gap));
  }

  // 4. Lyapunov monotonicity.
  {
    bool ok = true;
    std::string detail = "worst per-step W increase:";
    for (const char* name : {"rlc_matched", "rlc_unmatched", "rlc_mixed", "mechanical_matched"}) {
      const auto& r = runs.at(name).result;
      ok = ok && passed(r, "lyapunov.monotone") && r.summary.worst_lyapunov_violation <= 1e-9;
      detail += std::string(" ") + name + "=" + num(r.summary.worst_lyapunov_violation);
    }
    verdict(4, ok, detail + " (slack 1e-9)");
  }

  // 5. Assembly identity on every bundled scenario.
  {
    bool ok = true;
    double worst = 0.0;
    for (const auto& [name, t] : runs) {
      const auto* e = t.result.report.find("assembly.closed_loop_identity");
      ok = ok && e && e->passed && e->threshold <= 1e-12;
      if (e) worst = std::max(worst, e->value);
    }
    verdict(5, ok, "assembled F grad Hcl - d vs substituted control law over " + std::to_string(runs.size()) +
                       " scenarios x 100 states: worst relative gap=" + num(worst));
  }

  // 6. CbI equivalence over the matched horizon.
  {
    const auto& r = runs.at("rlc_matched").result;
    const double a = entry(r, "cbi.equivalence");
    const double b = entry(r, "cbi.equivalence_transformed");
    verdict(6, passed(r, "cbi.equivalence") && passed(r, "cbi.equivalence_transformed") && a <= 1e-7 && b <= 1e-7,
            "sup-norm gap original=" + num(a) + ", transformed=" + num(b));
  }

  // 7. Output-feedback rejection on the lossless LC.
  {
    const auto& r = runs.at("lc_cbi_tilde").result;
    const double err = x2_error(r);
    verdict(7, r.exit_code == 0 && err <= 1e-5,
            "lossless LC, Rd=1, d2=0.2: |x2-x2*|=" + num(err) + "; controller rhs(z, u_c) signature static_assert holds");
  }

  // 8. Negative controls.
  {
    const auto& s = scenarios.at("baseline_negative_control");
    const auto& r = runs.at("baseline_negative_control").result;
    const double offset = x2_error(r);
    const double bound = 0.1 * s.disturbance.d2.cwiseAbs().maxCoeff();
    const auto H = HamiltonianFn::quadratic((Matrix(2, 2) << 2, 0.3, 0.3, 1).finished());
    const HamiltonianFn corrupted(
        2, [H](const Vector& x) { return H.value(x); }, [H](const Vector& x) { return Vector(1.01 * H.gradient(x)); });
    std::vector<Vector> pts;
    std::mt19937_64 rng(kDefaultSeed);
    std::uniform_real_distribution<double> u(-2, 2);
    for (int k = 0; k < 20; ++k) pts.push_back((Vector(2) << u(rng), u(rng)).finished());
    const bool caught = !check_gradient_consistency(corrupted, pts).overall();
    verdict(8, r.exit_code == 0 && offset >= bound && caught,
            "(a) baseline offset |x2-x2*|=" + num(offset) + " >= " + num(bound) + "; (b) 1% gradient corruption " +
                (caught ? "detected" : "missed"));
  }

  // 9. Dynamic extension.
  {
    const auto& s = scenarios.at("dynamic_extension_mixed");
    const auto& r = runs.at("dynamic_extension_mixed").result;
    const auto base = build_system(s);
    bool structure = false;
    double cond = std::numeric_limits<double>::infinity();
    if (base.extension) {
      structure = validate_structure(base.extension->system).passed();
      cond = base.extension->condition_number;
    }
    const double err = x2_error(r);
    verdict(9, structure && std::isfinite(cond) && cond <= 1e8 && r.exit_code == 0 && err <= 1e-5,
            "m=2, p=1 extended: structure " + std::string(structure ? "valid" : "invalid") + ", cond(J12~)=" +
                num(cond) + ", |x2-x2*|=" + num(err));
  }

  // 10. Feedthrough structure of the CbI controller.
  {
    std::mt19937_64 rng(kDefaultSeed);
    std::uniform_int_distribution<int> dim(1, 4);
    int ok = 0;
    for (int k = 0; k < 50; ++k) {
      const int m = dim(rng);
      const int p = std::uniform_int_distribution<int>(1, m)(rng);
      const CbIController c(random_skew(m, rng), random_pd(m, rng), random_full_rank(m, p, rng),
                            HamiltonianFn::quadratic(Matrix::Identity(p, p)));
      if (check_feedthrough_structure(c.as_feedthrough(), {Vector::Zero(p)}, 1e-10)) ++ok;
    }
    verdict(10, ok == 50, std::to_string(ok) + "/50 random (J1, R1, E) triples satisfy the feedthrough conditions");
  }

  // 11. Numerical hygiene.
  {
    bool fd = true;
    int n = 0;
    for (const auto& [name, t] : runs)
      for (const auto& c : t.result.report.checks)
        if (c.name.rfind("numerics.", 0) == 0) {
          fd = fd && c.passed;
          ++n;
        }
    Scenario s = scenarios.at("rlc_mixed");
    s.checks = {"convergence"};
    s.sim.t_final = 20;
    const auto adaptive = run(s).result;
    s.sim.method = IntegrationMethod::RK4;
    s.sim.dt = 1e-4;
    s.sim.record_every = 10000;
    const auto fixed = run(s).result;
    const double gap =
        (adaptive.trajectory.terminal_state() - fixed.trajectory.terminal_state()).cwiseAbs().maxCoeff();
    verdict(11, fd && n > 0 && gap <= 1e-5,
            std::to_string(n) + " finite-difference checks on bundled Hamiltonians " + (fd ? "pass" : "fail") +
                "; RK4(dt=1e-4) vs RK45 at t=20: " + num(gap));
  }

  return failures == 0 ? 0 : 1;
}
