#include "phia/simulator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include "phia/equilibrium.hpp"

namespace phia {

std::string to_string(IntegrationMethod m) { return m == IntegrationMethod::RK4 ? "rk4" : "rk45"; }

IntegrationMethod integration_method_from_string(const std::string& s) {
  if (s == "rk4") return IntegrationMethod::RK4;
  if (s == "rk45") return IntegrationMethod::RK45;
  throw ContractViolation("unknown integration method '" + s + "' (expected rk4 or rk45)");
}

void IntegratorConfig::validate() const {
  require(t_final > t0, "IntegratorConfig: t_final must exceed t0");
  require(dt > 0.0, "IntegratorConfig: dt must be positive");
  require(record_every >= 1, "IntegratorConfig: record_every must be >= 1");
  if (method == IntegrationMethod::RK45) {
    require(rtol > 0.0 && atol > 0.0, "IntegratorConfig: rtol and atol must be positive");
    require(dt_min > 0.0 && dt_max >= dt_min, "IntegratorConfig: need 0 < dt_min <= dt_max");
  }
}

namespace {

// Dormand-Prince 5(4).
constexpr std::array<double, 7> kC{0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
constexpr double kA21 = 1.0 / 5;
constexpr double kA31 = 3.0 / 40, kA32 = 9.0 / 40;
constexpr double kA41 = 44.0 / 45, kA42 = -56.0 / 15, kA43 = 32.0 / 9;
constexpr double kA51 = 19372.0 / 6561, kA52 = -25360.0 / 2187, kA53 = 64448.0 / 6561,
                 kA54 = -212.0 / 729;
constexpr double kA61 = 9017.0 / 3168, kA62 = -355.0 / 33, kA63 = 46732.0 / 5247, kA64 = 49.0 / 176,
                 kA65 = -5103.0 / 18656;
constexpr double kB1 = 35.0 / 384, kB3 = 500.0 / 1113, kB4 = 125.0 / 192, kB5 = -2187.0 / 6784,
                 kB6 = 11.0 / 84;
constexpr double kE1 = 71.0 / 57600, kE3 = -71.0 / 16695, kE4 = 71.0 / 1920, kE5 = -17253.0 / 339200,
                 kE6 = 22.0 / 525, kE7 = -1.0 / 40;

struct Integrator {
  const Rhs& rhs;
  const IntegratorConfig& cfg;
  const StepObserver& observer;
  Solution sol;

  // Stage times at or past the segment end see the left limit of the
  // right-hand side there.
  Vector eval(double t, const Vector& w, double seg_end) {
    ++sol.rhs_evaluations;
    const double te = t >= seg_end ? std::nextafter(seg_end, -std::numeric_limits<double>::infinity()) : t;
    return rhs(te, w);
  }

  void record(double t, const Vector& w, const Vector& rate, const Vector& rate_left) {
    sol.times.push_back(t);
    sol.states.push_back(w);
    sol.rates.push_back(rate);
    sol.rates_left.push_back(rate_left);
  }

  [[noreturn]] void fail(const std::string& what) { throw IntegrationError(what, std::move(sol)); }

  void check_finite(double t, const Vector& w) {
    if (!w.allFinite()) {
      std::ostringstream os;
      os << "integrate: non-finite state at t = " << t;
      fail(os.str());
    }
  }

  // Integrates [a, b]; w holds the state at a on entry and at b on exit.
  // Returns the left-limit derivative at b.
  Vector segment_rk4(double a, double b, Vector& w, Vector k1) {
    const long n = std::max(1L, static_cast<long>(std::ceil((b - a) / cfg.dt - 1e-9)));
    const double h = (b - a) / static_cast<double>(n);
    Vector left = k1;
    for (long i = 0; i < n; ++i) {
      const double t = a + static_cast<double>(i) * h;
      const double t_next = i + 1 == n ? b : a + static_cast<double>(i + 1) * h;
      const Vector k2 = eval(t + 0.5 * h, w + 0.5 * h * k1, b);
      const Vector k3 = eval(t + 0.5 * h, w + 0.5 * h * k2, b);
      const Vector k4 = eval(t + h, w + h * k3, b);
      w += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      ++sol.accepted_steps;
      check_finite(t_next, w);
      if (observer) observer(t_next, w);
      if (i + 1 < n) {
        k1 = eval(t_next, w, b);
        if ((i + 1) % cfg.record_every == 0) record(t_next, w, k1, k1);
      } else {
        left = eval(t_next, w, b);
      }
    }
    return left;
  }

  Vector segment_rk45(double a, double b, Vector& w, Vector k1, double& h) {
    double t = a;
    Vector k7 = k1;
    while (t < b) {
      bool last = false;
      if (t + h >= b || b - (t + h) < cfg.dt_min) {
        h = b - t;
        last = true;
      }
      const Vector k2 = eval(t + kC[1] * h, w + h * kA21 * k1, b);
      const Vector k3 = eval(t + kC[2] * h, w + h * (kA31 * k1 + kA32 * k2), b);
      const Vector k4 = eval(t + kC[3] * h, w + h * (kA41 * k1 + kA42 * k2 + kA43 * k3), b);
      const Vector k5 = eval(t + kC[4] * h, w + h * (kA51 * k1 + kA52 * k2 + kA53 * k3 + kA54 * k4), b);
      const Vector k6 =
          eval(t + h, w + h * (kA61 * k1 + kA62 * k2 + kA63 * k3 + kA64 * k4 + kA65 * k5), b);
      const Vector w_new = w + h * (kB1 * k1 + kB3 * k3 + kB4 * k4 + kB5 * k5 + kB6 * k6);
      k7 = eval(t + h, w_new, b);
      const Vector err = h * (kE1 * k1 + kE3 * k3 + kE4 * k4 + kE5 * k5 + kE6 * k6 + kE7 * k7);

      double err_norm = 0.0;
      for (Eigen::Index i = 0; i < w.size(); ++i) {
        const double scale = cfg.atol + cfg.rtol * std::max(std::abs(w(i)), std::abs(w_new(i)));
        err_norm = std::max(err_norm, std::abs(err(i)) / scale);
      }
      if (!std::isfinite(err_norm)) err_norm = std::numeric_limits<double>::infinity();

      if (err_norm <= 1.0) {
        t = last ? b : t + h;
        w = w_new;
        ++sol.accepted_steps;
        check_finite(t, w);
        if (observer) observer(t, w);
        const double factor = err_norm == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err_norm, -0.2), 0.2, 5.0);
        const double h_used = h;
        h = std::min(cfg.dt_max, h_used * factor);
        if (last) {
          // keep the pre-clipping proposal for the next segment
          h = std::max(h, cfg.dt_min);
          break;
        }
        k1 = k7;
        record(t, w, k1, k7);
      } else {
        ++sol.rejected_steps;
        const double factor = std::clamp(0.9 * std::pow(err_norm, -0.2), 0.2, 1.0);
        h *= factor;
        if (h < cfg.dt_min) {
          std::ostringstream os;
          os << "integrate: step size underflow (h = " << h << " < dt_min = " << cfg.dt_min
             << ") at t = " << t;
          fail(os.str());
        }
      }
    }
    return k7;
  }

  Solution run(const Vector& w0) {
    cfg.validate();
    require(w0.allFinite(), "integrate: initial state must be finite");
    std::vector<double> cuts{cfg.t0};
    std::vector<double> bps = cfg.breakpoints;
    std::sort(bps.begin(), bps.end());
    for (double b : bps)
      if (b > cfg.t0 && b < cfg.t_final && b > cuts.back()) cuts.push_back(b);
    cuts.push_back(cfg.t_final);

    Vector w = w0;
    Vector k1 = eval(cfg.t0, w, std::numeric_limits<double>::infinity());
    record(cfg.t0, w, k1, k1);
    double h = std::min(cfg.dt, cfg.dt_max);
    for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
      const double a = cuts[s];
      const double b = cuts[s + 1];
      const Vector left = cfg.method == IntegrationMethod::RK4 ? segment_rk4(a, b, w, k1)
                                                               : segment_rk45(a, b, w, k1, h);
      // Restart at the segment end with the right-limit derivative.
      k1 = eval(b, w, std::numeric_limits<double>::infinity());
      record(b, w, k1, left);
    }
    return std::move(sol);
  }
};

}  // namespace

Solution integrate(const Rhs& rhs, const Vector& w0, const IntegratorConfig& cfg,
                   const StepObserver& observer) {
  Integrator integ{rhs, cfg, observer, {}};
  return integ.run(w0);
}

Vector interpolate(const std::vector<double>& times, const std::vector<Vector>& states,
                   const std::vector<Vector>& rates, const std::vector<Vector>& rates_left, double t) {
  require(!times.empty(), "interpolate: empty solution");
  if (t <= times.front()) return states.front();
  if (t >= times.back()) return states.back();
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  const auto k = static_cast<std::size_t>(it - times.begin()) - 1;
  const double t0 = times[k];
  const double t1 = times[k + 1];
  const double h = t1 - t0;
  const double s = (t - t0) / h;
  if (rates.empty()) return (1.0 - s) * states[k] + s * states[k + 1];
  const double s2 = s * s;
  const double s3 = s2 * s;
  const double h00 = 2 * s3 - 3 * s2 + 1;
  const double h10 = s3 - 2 * s2 + s;
  const double h01 = -2 * s3 + 3 * s2;
  const double h11 = s3 - s2;
  return h00 * states[k] + h10 * h * rates[k] + h01 * states[k + 1] + h11 * h * rates_left[k + 1];
}

Vector Trajectory::state_at(double t) const { return interpolate(times, states, rates, rates_left, t); }

bool Trajectory::well_formed() const {
  const auto n = times.size();
  if (states.size() != n || inputs.size() != n || H.size() != n || Hcl.size() != n || W.size() != n ||
      d1.size() != n || d2.size() != n)
    return false;
  if (!rates.empty() && (rates.size() != n || rates_left.size() != n)) return false;
  for (std::size_t k = 1; k < n; ++k)
    if (!(times[k] > times[k - 1])) return false;
  return true;
}

Trajectory make_trajectory(const Solution& sol, const Monitor& monitor, int m, int p, int zeta_dim) {
  Trajectory tr;
  tr.m = m;
  tr.p = p;
  tr.zeta_dim = zeta_dim;
  tr.times = sol.times;
  tr.states = sol.states;
  tr.rates = sol.rates;
  tr.rates_left = sol.rates_left;
  const auto n = sol.times.size();
  tr.inputs.reserve(n);
  tr.H.reserve(n);
  tr.Hcl.reserve(n);
  tr.W.reserve(n);
  tr.d1.reserve(n);
  tr.d2.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    auto s = monitor(sol.times[k], sol.states[k]);
    tr.inputs.push_back(std::move(s.u));
    tr.H.push_back(s.H);
    tr.Hcl.push_back(s.Hcl);
    tr.W.push_back(s.W);
    tr.d1.push_back(std::move(s.d1));
    tr.d2.push_back(std::move(s.d2));
  }
  return tr;
}

Trajectory simulate(const Rhs& rhs, const Monitor& monitor, const Vector& w0, const IntegratorConfig& cfg,
                    int m, int p, int zeta_dim) {
  require(w0.size() == m + p + zeta_dim, "simulate: initial state dimension mismatch");
  return make_trajectory(integrate(rhs, w0, cfg), monitor, m, p, zeta_dim);
}

double lyapunov_value(const HamiltonianFn& H, const Vector& w, const Vector& w_star) {
  require(w.size() == w_star.size() && w.size() == H.dim(), "lyapunov_value: dimension mismatch");
  return H.value(w) - (w - w_star).dot(H.gradient(w_star)) - H.value(w_star);
}

BregmanLyapunov::BregmanLyapunov(HamiltonianFn H, Vector w_star)
    : H_(std::move(H)), w_star_(std::move(w_star)), h_star_(H_.value(w_star_)), g_star_(H_.gradient(w_star_)) {}

double BregmanLyapunov::operator()(const Vector& w) const {
  return H_.value(w) - (w - w_star_).dot(g_star_) - h_star_;
}

IntegratorConfig with_disturbance_breakpoint(IntegratorConfig cfg, const Disturbance& dist) {
  if (dist.step_time > cfg.t0 && dist.step_time < cfg.t_final) cfg.breakpoints.push_back(dist.step_time);
  return cfg;
}

Trajectory simulate_closed_loop(const ClosedLoopSystem& cl, const Disturbance& dist, const Vector& w0,
                                const IntegratorConfig& cfg, const std::optional<Vector>& w_star) {
  require(w0.size() == cl.dim(), "simulate_closed_loop: initial state dimension mismatch");
  const Vector target =
      w_star ? *w_star : solve_equilibrium(cl.plant(), cl.controller(), dist).state.w();
  const BregmanLyapunov lyap(cl.Hcl(), target);
  const int n = cl.plant().n();
  const auto& H = cl.plant().H();
  Rhs rhs = [&cl, &dist](double t, const Vector& w) { return cl.rhs(w, dist, t); };
  Monitor monitor = [&](double t, const Vector& w) {
    return MonitorSample{cl.input(w), H.value(w.head(n)), cl.Hcl().value(w), lyap(w), dist.d1_at(t),
                         dist.d2_at(t)};
  };
  return simulate(rhs, monitor, w0, with_disturbance_breakpoint(cfg, dist), cl.m(), cl.p(), cl.p());
}

std::optional<double> settling_time(const Trajectory& traj, const Vector& w_bar, double tol) {
  if (traj.empty()) return std::nullopt;
  std::size_t first_ok = traj.size();
  for (std::size_t k = traj.size(); k-- > 0;) {
    if (linalg::inf_norm(traj.states[k] - w_bar) > tol) break;
    first_ok = k;
  }
  if (first_ok == traj.size()) return std::nullopt;
  const double t0 = traj.times.front();
  const double tf = traj.times.back();
  const double ts = traj.times[first_ok];
  if (tf - ts < 0.05 * (tf - t0)) return std::nullopt;
  return ts;
}

}  // namespace phia

namespace phia {

Trajectory simulate_plant(const PartitionedPHSystem& sys, const InputLaw& input, const Disturbance& dist,
                          const Vector& x0, const IntegratorConfig& cfg, const std::optional<Vector>& x_ref) {
  require(x0.size() == sys.n(), "simulate_plant: initial state dimension mismatch");
  const BregmanLyapunov lyap(sys.H(), x_ref.value_or(sys.x_star()));
  Rhs rhs = [&](double t, const Vector& x) { return plant_rhs(sys, x, input(t, x), dist, t); };
  Monitor monitor = [&](double t, const Vector& x) {
    const double h = sys.H().value(x);
    return MonitorSample{input(t, x), h, h, lyap(x), dist.d1_at(t), dist.d2_at(t)};
  };
  return simulate(rhs, monitor, x0, with_disturbance_breakpoint(cfg, dist), sys.m(), sys.p(), 0);
}

}  // namespace phia
