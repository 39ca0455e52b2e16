#include "phia/runner.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>

#include <json.hpp>

#include "phia/cbi.hpp"
#include "phia/verification.hpp"

namespace phia {

namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

bool requested(const Scenario& s, const std::string& group) {
  return std::find(s.checks.begin(), s.checks.end(), group) != s.checks.end();
}

// Everything a run needs, in (x1, x2, zeta) coordinates. Interconnection
// variants are integrated in their own (x1, x2, z) form and mapped through the
// constant linear change of variables.
class Model {
 public:
  Model(const Scenario& s, std::uint64_t seed) : s_(s), built_(build_system(s, seed)) {
    const auto& plant = built_.plant;
    switch (s.controller.variant) {
      case ControllerVariant::Direct:
        cl_.emplace(plant, build_controller(s, plant));
        break;
      case ControllerVariant::Cbi: {
        cl_.emplace(plant, build_controller(s, plant));
        cbi_.emplace(plant, make_cbi_controller(plant, cl_->controller(), seed));
        break;
      }
      case ControllerVariant::CbiTilde: {
        const Vector& xs = plant.x_star();
        const Matrix Kc = s.controller.Kc ? *s.controller.Kc : Matrix::Identity(plant.p(), plant.p());
        auto ctrl = cbi_tilde_controller(plant.J1(xs), plant.J12(xs), *s.controller.Rd,
                                         HamiltonianFn::quadratic(linalg::inverse_checked(Kc, "Kc")));
        tilde_.emplace(plant, std::move(ctrl), seed);
        cl_.emplace(tilde_->equivalent_closed_loop());
        break;
      }
      case ControllerVariant::PassiveBaseline: {
        const Matrix Kc = s.controller.Kc ? *s.controller.Kc : Matrix::Identity(plant.m(), plant.m());
        baseline_.emplace(passive_ia_closed_loop(
            plant, *s.controller.KI, HamiltonianFn::quadratic(linalg::inverse_checked(Kc, "Kc")), std::nullopt,
            seed));
        break;
      }
    }
    if (cl_) E_ = cl_->controller().E();
  }

  const PartitionedPHSystem& plant() const { return built_.plant; }
  const Disturbance& dist() const { return built_.disturbance; }
  const std::optional<ExtendedSystem>& extension() const { return built_.extension; }
  const std::optional<ClosedLoopSystem>& closed_loop() const { return cl_; }
  const std::optional<PassiveIAClosedLoop>& baseline() const { return baseline_; }
  bool interconnection() const { return cbi_.has_value() || tilde_.has_value(); }

  int m() const { return plant().m(); }
  int p() const { return plant().p(); }
  int zeta_dim() const { return baseline_ ? plant().m() : plant().p(); }
  int dim() const { return plant().n() + zeta_dim(); }

  const HamiltonianFn& Hcl() const { return baseline_ ? baseline_->Hcl() : cl_->Hcl(); }

  Vector rhs(double t, const Vector& w) const {
    if (baseline_) return baseline_->rhs(w, dist(), t);
    if (cbi_) return cbi_untransform(cbi_->rhs(cbi_transform(w, E_), dist(), t), E_);
    if (tilde_) return cbi_untransform(tilde_->rhs(cbi_transform(w, E_), dist(), t), E_);
    return cl_->rhs(w, dist(), t);
  }

  // Input applied to the simulated plant.
  Vector input(double t, const Vector& w) const {
    if (baseline_) return baseline_->input(w);
    if (cbi_) return cbi_->input(cbi_transform(w, E_), t, dist());
    if (tilde_) return tilde_->input(cbi_transform(w, E_));
    return cl_->input(w);
  }

  Vector undisturbed_state() const {
    if (cl_) return cl_->undisturbed_equilibrium();
    Vector w = Vector::Zero(dim());
    w.head(plant().n()) = plant().x_star();
    return w;
  }

 private:
  const Scenario& s_;
  BuiltSystem built_;
  std::optional<ClosedLoopSystem> cl_;
  std::optional<CbIInterconnection> cbi_;
  std::optional<TildeInterconnection> tilde_;
  std::optional<PassiveIAClosedLoop> baseline_;
  Matrix E_;
};

CheckReport assumption_checks(const Model& model, std::uint64_t seed) {
  CheckReport rep;
  rep.seed = seed;
  if (const auto& cl = model.closed_loop()) {
    rep.append(check_assumptions(cl->plant(), cl->controller(), model.dist(), classify(model.dist()), seed));
  } else {
    rep.append(validate_structure(model.plant(), seed).checks);
  }
  if (const auto& ext = model.extension()) {
    const double cond = ext->condition_number;
    rep.add({"extension.J12_tilde_invertible", std::isfinite(cond) && cond <= 1.0 / tol::kRank, cond,
             1.0 / tol::kRank, "extended J12 square and invertible"});
    rep.append(validate_structure(ext->system, seed).checks);
  }
  rep.sort();
  return rep;
}

CheckReport prefixed(const CheckReport& in, const std::string& prefix) {
  CheckReport out;
  out.seed = in.seed;
  for (auto c : in.checks) {
    c.name = prefix + c.name;
    out.add(std::move(c));
  }
  return out;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

ojson vec_json(const Vector& v) {
  ojson a = ojson::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

ojson number_or_null(double v) { return std::isfinite(v) ? ojson(v) : ojson(nullptr); }

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
}

}  // namespace

void mark_expected_failures(CheckReport& report, const std::vector<std::string>& expected_fail) {
  for (auto& c : report.checks)
    c.expected_fail = std::find(expected_fail.begin(), expected_fail.end(), c.name) != expected_fail.end();
}

CheckReport assumption_report(const Scenario& s, std::uint64_t seed) {
  const Model model(s, seed);
  auto rep = assumption_checks(model, seed);
  mark_expected_failures(rep, s.expected_fail);
  return rep;
}

Equilibrium predicted_equilibrium(const Scenario& s, std::uint64_t seed) {
  const Model model(s, seed);
  const auto& cl = model.closed_loop();
  if (!cl) throw AssumptionError("passive-output baseline: no equilibrium under unmatched disturbances");
  return solve_equilibrium(cl->plant(), cl->controller(), model.dist(), seed);
}

CheckReport trajectory_checks(const Scenario& s, const Trajectory& traj,
                              const std::optional<EquilibriumState>& target) {
  CheckReport rep;
  if (requested(s, "lyapunov")) rep.append(check_lyapunov_monotone(traj, tol::kLyapunovSlack, s.disturbance.step_time));
  if (requested(s, "convergence") && target) rep.append(check_convergence(traj, *target, tol::kConvergence));
  return rep;
}

RunResult run_scenario(const Scenario& s, const RunOptions& opts) {
  RunResult r;
  r.scenario = s.name;
  r.report.seed = opts.seed;
  const fs::path out_dir(opts.out_dir);
  auto finish = [&](int code, std::string message) -> RunResult {
    r.exit_code = code;
    r.message = std::move(message);
    mark_expected_failures(r.report, s.expected_fail);
    r.report.sort();
    if (opts.write_outputs) {
      fs::create_directories(out_dir);
      r.report_path = (out_dir / (s.name + ".report.json")).string();
      write_text(r.report_path, report_json(r, opts.seed));
    }
    return r;
  };

  std::optional<Model> model;
  try {
    model.emplace(s, opts.seed);
  } catch (const AssumptionError& e) {
    return finish(exit_code::kAssumption, e.what());
  } catch (const ContractViolation& e) {
    return finish(exit_code::kAssumption, e.what());
  }
  const auto& cl = model->closed_loop();
  const auto& dist = model->dist();
  const auto& plant = model->plant();

  if (requested(s, "structure")) r.report.append(validate_structure(plant, opts.seed).checks);
  if (requested(s, "assumptions")) {
    auto assumptions = assumption_checks(*model, opts.seed);
    mark_expected_failures(assumptions, s.expected_fail);
    r.report.append(assumptions);
    if (!assumptions.all_as_expected() && !opts.force) {
      std::string failed;
      for (const auto& c : assumptions.checks)
        if (!c.as_expected()) failed += (failed.empty() ? "" : ", ") + c.name;
      return finish(exit_code::kAssumption, "required assumptions failed: " + failed);
    }
  }

  if (requested(s, "gradient")) {
    const auto samples = sample_states(plant.domain(), plant.x_star(), 100, opts.seed);
    r.report.append(prefixed(check_gradient_consistency(plant.H(), samples), "numerics.H."));
    const auto aug = augmented_samples(plant, model->zeta_dim(), 100, opts.seed);
    r.report.append(prefixed(check_gradient_consistency(model->Hcl(), aug), "numerics.Hcl."));
  }

  if (requested(s, "assembly")) {
    if (cl) {
      const auto samples = closed_loop_samples(*cl, 100, opts.seed);
      r.report.append(check_assembly(*cl, dist, samples));
      if (model->interconnection()) {
        const double t = std::max(dist.step_time, 0.0);
        r.report.add(check_rhs_agreement(
            "assembly.interconnection_identity", "plant and controller interconnection reproduces the closed loop",
            [&](double tt, const Vector& w) { return model->rhs(tt, w); },
            [&](double tt, const Vector& w) { return cl->rhs(w, dist, tt); }, samples, t));
      }
    } else {
      r.report.append(check_assembly(*model->baseline(), dist, augmented_samples(plant, model->zeta_dim(), 100, opts.seed)));
    }
  }

  std::optional<Equilibrium> eq;
  if (cl) {
    try {
      eq = solve_equilibrium(cl->plant(), cl->controller(), dist, opts.seed);
    } catch (const AssumptionError& e) {
      return finish(opts.force ? exit_code::kNumerical : exit_code::kAssumption, e.what());
    } catch (const NumericalError& e) {
      return finish(exit_code::kNumerical, e.what());
    }
    r.target = eq->state;
    r.summary.predicted_equilibrium = eq->state.w();
    if (requested(s, "equilibrium")) {
      const auto& st = eq->state;
      r.report.add({"equilibrium.residual", st.residual <= tol::kEquilibriumResidual, st.residual,
                    tol::kEquilibriumResidual, "closed-loop right-hand side vanishes at the predicted equilibrium"});
      const Vector x = linalg::concat({&st.x1_bar, &st.x2_star});
      const auto& ctl = cl->controller();
      const auto open = open_loop_gradient_at_equilibrium(eq->gradient, ctl.E());
      const Vector g = cl->plant().H().gradient(x);
      const Vector gc = ctl.Hc().gradient(ctl.z(st.x1_bar, st.zeta_bar));
      const double gap = std::max({linalg::inf_norm(g.head(plant.m()) - open.dH_dx1),
                                   linalg::inf_norm(g.tail(plant.p()) - open.dH_dx2),
                                   linalg::inf_norm(gc - open.dHc_dz)});
      r.report.add({"equilibrium.gradient_formula", gap <= tol::kGradientIdentity, gap, tol::kGradientIdentity,
                    "equilibrium gradient matches the closed-form expression"});
      if (s.expected) {
        const Vector want = linalg::concat({&s.expected->x1_bar, &s.expected->x2_star, &s.expected->zeta_bar});
        const double err = linalg::inf_norm(st.w() - want);
        r.report.add({"equilibrium.expected", err <= tol::kEquilibriumResidual, err, tol::kEquilibriumResidual,
                      "solver agrees with the analytic equilibrium in the scenario file"});
      }
    }
  } else {
    r.target = EquilibriumState{plant.x1_star(), plant.x2_star(), Vector(), 0.0, 0};
  }

  const Vector w_undisturbed = model->undisturbed_state();
  const Vector w0 = s.initial.w0 ? *s.initial.w0 : Vector(w_undisturbed + s.initial.equilibrium_offset);
  const Vector w_ref = eq ? eq->state.w() : w_undisturbed;
  const BregmanLyapunov lyap(model->Hcl(), w_ref);
  const int n = plant.n();
  const Monitor monitor = [&](double t, const Vector& w) {
    return MonitorSample{model->input(t, w), plant.H().value(w.head(n)), model->Hcl().value(w), lyap(w),
                         dist.d1_at(t), dist.d2_at(t)};
  };
  try {
    r.trajectory = simulate([&](double t, const Vector& w) { return model->rhs(t, w); }, monitor, w0,
                            with_disturbance_breakpoint(s.sim, dist), model->m(), model->p(), model->zeta_dim());
  } catch (const NumericalError& e) {
    return finish(exit_code::kNumerical, std::string("integration failed: ") + e.what());
  }

  r.report.append(trajectory_checks(s, r.trajectory, r.target));
  if (requested(s, "cbi_equivalence") && cl) {
    try {
      r.report.append(check_cbi_equivalence(cl->plant(), cl->controller(), dist, w0, s.sim));
    } catch (const NumericalError& e) {
      return finish(exit_code::kNumerical, std::string("integration failed: ") + e.what());
    }
  }

  r.summary.terminal_state = r.trajectory.terminal_state();
  r.summary.worst_lyapunov_violation = worst_lyapunov_violation(r.trajectory, dist.step_time);
  if (eq) r.summary.settling_time = settling_time(r.trajectory, eq->state.w(), tol::kConvergence);

  if (opts.write_outputs) {
    fs::create_directories(out_dir);
    r.trajectory_path = (out_dir / (s.name + ".csv")).string();
    write_trajectory_csv(r.trajectory_path, r.trajectory);
  }
  mark_expected_failures(r.report, s.expected_fail);
  if (!r.report.all_as_expected()) {
    std::string failed;
    for (const auto& c : r.report.checks)
      if (!c.as_expected()) failed += (failed.empty() ? "" : ", ") + c.name;
    return finish(exit_code::kNumerical, "checks not as expected: " + failed);
  }
  return finish(exit_code::kSuccess, "ok");
}

RunResult run_scenario_file(const std::string& path, const RunOptions& opts) {
  Scenario s;
  try {
    s = load_scenario(path);
  } catch (const ScenarioError& e) {
    RunResult r;
    r.scenario = fs::path(path).stem().string();
    r.exit_code = exit_code::kUsage;
    r.message = std::string(path) + ": " + e.what();
    return r;
  }
  return run_scenario(s, opts);
}

int run_suite(const std::string& dir, const RunOptions& opts) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  std::sort(files.begin(), files.end());

  std::vector<std::future<RunResult>> jobs;
  for (const auto& f : files) {
    RunOptions o = opts;
    o.out_dir = (fs::path(opts.out_dir) / f.stem()).string();
    jobs.push_back(std::async(std::launch::async, [f, o] { return run_scenario_file(f.string(), o); }));
  }
  std::vector<std::pair<std::string, RunResult>> results;
  for (std::size_t i = 0; i < jobs.size(); ++i) results.emplace_back(files[i].filename().string(), jobs[i].get());
  std::sort(results.begin(), results.end(), [](const auto& a, const auto& b) {
    return std::tie(a.second.scenario, a.first) < std::tie(b.second.scenario, b.first);
  });

  int worst = exit_code::kSuccess;
  ojson index;
  index["schema"] = 1;
  index["seed"] = opts.seed;
  ojson entries = ojson::array();
  for (const auto& [file, r] : results) {
    worst = std::max(worst, r.exit_code);
    entries.push_back(ojson{{"scenario", r.scenario},
                            {"file", file},
                            {"exit_code", r.exit_code},
                            {"overall", r.report.overall()},
                            {"as_expected", r.report.all_as_expected()},
                            {"message", r.message},
                            {"report", r.report_path.empty() ? ojson(nullptr)
                                                             : ojson(fs::relative(r.report_path, opts.out_dir).string())}});
  }
  index["scenarios"] = entries;
  fs::create_directories(opts.out_dir);
  write_text(fs::path(opts.out_dir) / "index.json", index.dump(2) + "\n");
  return worst;
}

void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  const auto d1 = traj.d1.empty() ? 0 : traj.d1.front().size();
  const auto d2 = traj.d2.empty() ? 0 : traj.d2.front().size();
  const auto nu = traj.inputs.empty() ? 0 : traj.inputs.front().size();
  std::string header = "t";
  for (int i = 0; i < traj.m; ++i) header += ",x1_" + std::to_string(i);
  for (int i = 0; i < traj.p; ++i) header += ",x2_" + std::to_string(i);
  for (int i = 0; i < traj.zeta_dim; ++i) header += ",zeta_" + std::to_string(i);
  for (Eigen::Index i = 0; i < nu; ++i) header += ",u_" + std::to_string(i);
  header += ",H,Hcl,W";
  for (Eigen::Index i = 0; i < d1; ++i) header += ",d1_" + std::to_string(i);
  for (Eigen::Index i = 0; i < d2; ++i) header += ",d2_" + std::to_string(i);
  out << header << '\n';
  std::string line;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    line = fmt(traj.times[k]);
    auto put = [&line](const Vector& v) {
      for (Eigen::Index i = 0; i < v.size(); ++i) line += "," + fmt(v(i));
    };
    put(traj.states[k]);
    put(traj.inputs[k]);
    line += "," + fmt(traj.H[k]) + "," + fmt(traj.Hcl[k]) + "," + fmt(traj.W[k]);
    put(traj.d1[k]);
    put(traj.d2[k]);
    out << line << '\n';
  }
}

Trajectory read_trajectory_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  std::string header;
  std::getline(in, header);
  std::vector<std::string> cols;
  {
    std::stringstream ss(header);
    for (std::string c; std::getline(ss, c, ',');) cols.push_back(c);
  }
  auto count = [&](const std::string& prefix) {
    return static_cast<int>(std::count_if(cols.begin(), cols.end(),
                                          [&](const std::string& c) { return c.rfind(prefix, 0) == 0; }));
  };
  Trajectory traj;
  traj.m = count("x1_");
  traj.p = count("x2_");
  traj.zeta_dim = count("zeta_");
  const int nu = count("u_");
  const int nd1 = count("d1_");
  const int nd2 = count("d2_");
  const int dim = traj.m + traj.p + traj.zeta_dim;
  const std::size_t width = static_cast<std::size_t>(1 + dim + nu + 3 + nd1 + nd2);
  if (cols.empty() || cols.front() != "t" || cols.size() != width)
    throw std::runtime_error("'" + path + "': unrecognized trajectory header");

  std::vector<double> row;
  for (std::string line; std::getline(in, line);) {
    if (line.empty()) continue;
    row.clear();
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) row.push_back(std::stod(cell));
    if (row.size() != width) throw std::runtime_error("'" + path + "': ragged row");
    std::size_t i = 0;
    auto take = [&](int n) {
      Vector v(n);
      for (int j = 0; j < n; ++j) v(j) = row[i++];
      return v;
    };
    traj.times.push_back(row[i++]);
    traj.states.push_back(take(dim));
    traj.inputs.push_back(take(nu));
    traj.H.push_back(row[i++]);
    traj.Hcl.push_back(row[i++]);
    traj.W.push_back(row[i++]);
    traj.d1.push_back(take(nd1));
    traj.d2.push_back(take(nd2));
  }
  return traj;
}

std::string report_json(const RunResult& r, std::uint64_t seed) {
  ojson root;
  root["schema"] = 1;
  root["scenario"] = r.scenario;
  ojson checks = ojson::array();
  for (const auto& c : r.report.checks) {
    checks.push_back(ojson{{"name", c.name},
                           {"verdict", c.passed ? "pass" : "fail"},
                           {"value", number_or_null(c.value)},
                           {"threshold", number_or_null(c.threshold)},
                           {"anchor", c.anchor},
                           {"expected_fail", c.expected_fail}});
  }
  root["checks"] = checks;
  root["overall"] = r.report.overall();
  root["as_expected"] = r.report.all_as_expected();
  ojson summary;
  summary["terminal_state"] = vec_json(r.summary.terminal_state);
  summary["predicted_equilibrium"] =
      r.summary.predicted_equilibrium ? vec_json(*r.summary.predicted_equilibrium) : ojson(nullptr);
  summary["settling_time"] = r.summary.settling_time ? ojson(*r.summary.settling_time) : ojson(nullptr);
  summary["worst_lyapunov_violation"] = number_or_null(r.summary.worst_lyapunov_violation);
  root["summary"] = summary;
  root["trajectory"] = r.trajectory_path.empty() ? ojson(nullptr)
                                                 : ojson(fs::path(r.trajectory_path).filename().string());
  root["exit_code"] = r.exit_code;
  root["message"] = r.message;
  root["seed"] = seed;
  return root.dump(2) + "\n";
}

std::string equilibrium_json(const Scenario& s, const Equilibrium& eq) {
  ojson root;
  root["scenario"] = s.name;
  root["case"] = to_string(eq.gradient.kind);
  root["x1_bar"] = vec_json(eq.state.x1_bar);
  root["x2_star"] = vec_json(eq.state.x2_star);
  root["zeta_bar"] = vec_json(eq.state.zeta_bar);
  root["residual"] = eq.state.residual;
  root["gradient"] = ojson{{"x1", vec_json(eq.gradient.g_x1)},
                           {"x2", vec_json(eq.gradient.g_x2)},
                           {"zeta", vec_json(eq.gradient.g_zeta)}};
  return root.dump(2) + "\n";
}

}  // namespace phia
