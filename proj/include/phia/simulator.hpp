#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "phia/controller.hpp"
#include "phia/hamiltonian.hpp"
#include "phia/linalg.hpp"
#include "phia/ph_system.hpp"

namespace phia {

enum class IntegrationMethod { RK4, RK45 };

std::string to_string(IntegrationMethod m);
IntegrationMethod integration_method_from_string(const std::string& s);

struct IntegratorConfig {
  IntegrationMethod method = IntegrationMethod::RK45;
  // Fixed step for RK4; initial step guess for RK45.
  double dt = 1e-3;
  double rtol = 1e-8;
  double atol = 1e-10;
  double dt_min = 1e-12;
  double dt_max = 0.5;
  double t0 = 0.0;
  double t_final = 10.0;
  // Times where the right-hand side may jump. Steps land on them exactly and
  // the integrator restarts there.
  std::vector<double> breakpoints;
  // RK4 only: keep every n-th step (segment ends are always kept).
  int record_every = 1;

  void validate() const;
};

using Rhs = std::function<Vector(double t, const Vector& w)>;
using StepObserver = std::function<void(double t, const Vector& w)>;

/// Raw integrator output. rates[k] is the right-limit derivative at times[k];
/// rates_left[k] the left limit, which differs only at breakpoints.
struct Solution {
  std::vector<double> times;
  std::vector<Vector> states;
  std::vector<Vector> rates;
  std::vector<Vector> rates_left;
  long accepted_steps = 0;
  long rejected_steps = 0;
  long rhs_evaluations = 0;
};

class IntegrationError : public NumericalError {
 public:
  IntegrationError(const std::string& what, Solution partial)
      : NumericalError(what), partial(std::move(partial)) {}
  Solution partial;
};

/// Fixed-step classical RK4 or adaptive Dormand-Prince 5(4). RK45 accepts a
/// step when max_i |err_i| / (atol + rtol max(|w_i|, |w_new_i|)) <= 1. The
/// observer runs at every accepted step.
Solution integrate(const Rhs& rhs, const Vector& w0, const IntegratorConfig& cfg,
                   const StepObserver& observer = {});

/// Cubic Hermite interpolation of a solution between recorded steps.
Vector interpolate(const std::vector<double>& times, const std::vector<Vector>& states,
                   const std::vector<Vector>& rates, const std::vector<Vector>& rates_left, double t);

struct MonitorSample {
  Vector u;
  double H = 0.0;
  double Hcl = 0.0;
  double W = 0.0;
  Vector d1;
  Vector d2;
};

using Monitor = std::function<MonitorSample(double t, const Vector& w)>;

/// Time-stamped closed-loop record. States are laid out as (x1, x2, zeta) with
/// dim x1 = m, dim x2 = p and dim zeta = zeta_dim.
struct Trajectory {
  int m = 0;
  int p = 0;
  int zeta_dim = 0;
  std::vector<double> times;
  std::vector<Vector> states;
  std::vector<Vector> inputs;
  std::vector<double> H;
  std::vector<double> Hcl;
  std::vector<double> W;
  std::vector<Vector> d1;
  std::vector<Vector> d2;
  // Derivatives for dense output; empty for trajectories loaded from CSV.
  std::vector<Vector> rates;
  std::vector<Vector> rates_left;

  std::size_t size() const { return times.size(); }
  bool empty() const { return times.empty(); }
  const Vector& terminal_state() const { return states.back(); }
  /// Hermite interpolation when rates are present, linear otherwise.
  Vector state_at(double t) const;
  /// Equal lengths and strictly increasing times.
  bool well_formed() const;
};

Trajectory make_trajectory(const Solution& sol, const Monitor& monitor, int m, int p, int zeta_dim);

/// Integrates and records monitors at every kept step.
Trajectory simulate(const Rhs& rhs, const Monitor& monitor, const Vector& w0, const IntegratorConfig& cfg,
                    int m, int p, int zeta_dim);

/// Bregman divergence of H at w*: W = H(w) - (w - w*)^T grad H(w*) - H(w*).
double lyapunov_value(const HamiltonianFn& H, const Vector& w, const Vector& w_star);

/// Precomputes H(w*) and grad H(w*).
class BregmanLyapunov {
 public:
  BregmanLyapunov(HamiltonianFn H, Vector w_star);
  double operator()(const Vector& w) const;
  const Vector& w_star() const { return w_star_; }

 private:
  HamiltonianFn H_;
  Vector w_star_;
  double h_star_;
  Vector g_star_;
};

/// Adds the disturbance step time to the breakpoints when it lies inside the horizon.
IntegratorConfig with_disturbance_breakpoint(IntegratorConfig cfg, const Disturbance& dist);

/// Closed-loop simulation with H, Hcl, W, u and d recorded at each step. W is
/// measured against `w_star`, or against the solved equilibrium for the
/// disturbance when w_star is not given.
Trajectory simulate_closed_loop(const ClosedLoopSystem& cl, const Disturbance& dist, const Vector& w0,
                                const IntegratorConfig& cfg,
                                const std::optional<Vector>& w_star = std::nullopt);

/// First time after which |w - w_bar|_inf <= tol holds to the end, provided it
/// holds for at least 5% of the horizon.
std::optional<double> settling_time(const Trajectory& traj, const Vector& w_bar, double tol = 1e-5);

}  // namespace phia

namespace phia {

using InputLaw = std::function<Vector(double t, const Vector& x)>;

/// Plant-only simulation (no controller state). Hcl records H and W is the
/// Bregman divergence of H at x_ref (x_star by default).
Trajectory simulate_plant(const PartitionedPHSystem& sys, const InputLaw& input, const Disturbance& dist,
                          const Vector& x0, const IntegratorConfig& cfg,
                          const std::optional<Vector>& x_ref = std::nullopt);

}  // namespace phia
