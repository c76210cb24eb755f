#pragma once

// Online control synthesis toward a point of the guaranteed reachable set.
//
// The loop alternates learn-control cycles with waypoint updates: waypoints
// z_n = theta_n * y_ref march along the segment toward the target at a fixed
// distance r from the current anchor state, r being the learning radius of
// the surrogate.  The steering input for the next cycle is the closed-form
// argmin of the estimated distance derivative.  Two variants exist: the
// plain loop stops once a waypoint lands within r of the target and the
// anchor catches up (reaching a 2r ball around it), while the finite-time
// loop tracks drift-subtracted anchors toward y - aT and stops at the
// horizon.
//
// Synthesis never touches the plant's vector field directly.  All it may use
// are the local data at the starting state and the states returned by the
// simulator handle, which is the interface enforcing that firewall.

#include "grsreach/core.hpp"
#include "grsreach/learner.hpp"
#include "grsreach/proxy.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace grsreach {

struct TrivialTargetError : Error {
  using Error::Error;
};

/// Target rejected up front (outside the GRS, or its unique control clamps).
struct TargetError : Error {
  using Error::Error;
};

/// The per-cycle decrease condition failed; no waypoint with larger theta.
struct WaypointRegressionError : Error {
  using Error::Error;
};

enum class Variant { algorithm1, algorithm2 };

enum class Termination {
  target_radius,    // anchor within r of a waypoint within r of the target
  horizon_reached,  // finite-time variant ran out its horizon
  max_cycles,
  domain_exit,      // plant left the guard region
  regressed,        // three consecutive cycles without decrease
};

inline const char* to_string(Termination t) {
  switch (t) {
    case Termination::target_radius: return "target_radius";
    case Termination::horizon_reached: return "horizon_reached";
    case Termination::max_cycles: return "max_cycles";
    case Termination::domain_exit: return "domain_exit";
    case Termination::regressed: return "regressed";
  }
  return "unknown";
}

inline const char* to_string(Variant v) {
  return v == Variant::algorithm1 ? "algorithm1" : "algorithm2";
}

/// The only plant knowledge synthesis is allowed: values at the start state
/// plus the global Lipschitz bounds.
struct LocalData {
  Vec f_x0;
  Mat G_x0;
  double lipschitz_f = 0.0;
  double lipschitz_G = 0.0;

  /// Convenience probe; performs exactly one f and one G evaluation.
  static LocalData probe(const ControlAffineField& field, const Vec& x0) {
    return LocalData{field.f(x0), field.G(x0), field.lipschitz_f, field.lipschitz_G};
  }
};

/// Owns the true system during a run.  Synthesis code only sees the states
/// this hands back; the field evaluators stay private.
class PlantSimulator {
 public:
  PlantSimulator(ControlAffineField field, Vec x0, GuardRegion guard = {},
                 int substep_divisor = 20)
      : field_(std::move(field)),
        guard_(std::move(guard)),
        substep_divisor_(substep_divisor),
        x_(std::move(x0)),
        control_(PiecewiseConstantControl::starting_at(0.0)) {
    if (x_.size() != field_.state_dim)
      throw DimensionError("simulator: initial state dimension mismatch");
    traj_.append_sample(t_, x_);
  }

  /// Apply one learn-control cycle and return its record.  On a guard exit
  /// the completed pieces stay recorded and the error propagates.
  CycleRecord run_cycle(const Vec& u0, const CycleConfig& cfg) {
    cfg.validate();
    if (cfg.input_dim != field_.input_dim)
      throw DimensionError("simulator: cycle input dimension mismatch");
    CycleRecord rec;
    rec.index = cycles_;
    rec.start_time = t_;
    rec.dt = cfg.dt;
    rec.inputs = perturbation_inputs(u0, cfg.eps);
    rec.states.push_back(x_);
    const double t_cycle = t_;
    const double substep = cfg.dt / substep_divisor_;
    for (int j = 0; j <= cfg.input_dim; ++j) {
      const double ta = t_cycle + j * cfg.dt;
      const double tb = t_cycle + (j + 1) * cfg.dt;
      const Vec& u = rec.inputs[static_cast<std::size_t>(j)];
      const Trajectory leg =
          integrate(field_, PiecewiseConstantControl::constant(u, ta, tb), x_, ta, tb,
                    substep, guard_);
      x_ = leg.back_state();
      t_ = tb;
      traj_.extend(leg);
      control_.append(tb, u);
      rec.states.push_back(x_);
    }
    ++cycles_;
    return rec;
  }

  const Vec& state() const { return x_; }
  double time() const { return t_; }
  int cycles_run() const { return cycles_; }
  int state_dim() const { return field_.state_dim; }
  int input_dim() const { return field_.input_dim; }
  const Trajectory& trajectory() const { return traj_; }
  const PiecewiseConstantControl& control() const { return control_; }

 private:
  ControlAffineField field_;
  GuardRegion guard_;
  int substep_divisor_;
  Vec x_;
  double t_ = 0.0;
  int cycles_ = 0;
  Trajectory traj_;
  PiecewiseConstantControl control_;
};

/// One accepted waypoint along the reference segment.
struct WaypointState {
  int cycle = 0;     // index of the cycle whose anchor produced this waypoint
  double theta = 0.0;
  Vec waypoint;      // z_n (absolute coordinates)
  Vec anchor;        // anchor it was solved against (drift-subtracted in the
                     // finite-time variant)
  double radius = 0.0;
};

struct CycleDiagnostics {
  int index = 0;
  double start_time = 0.0;
  double theta_active = 0.0;  // waypoint parameter steering this cycle
  Vec z_active;               // waypoint steering this cycle (absolute)
  double anchor_distance = 0.0;  // |anchor - z_active| at cycle end
  bool accepted = false;         // waypoint advanced after this cycle
  double objective = std::numeric_limits<double>::quiet_NaN();
  Vec lambda_star;
  bool condition_holds = false;
  double condition_lhs = 0.0;
  double condition_rhs = 0.0;
  double bound_C_value = 0.0;
  double bound_mu_value = 0.0;
  double lyapunov_negative_fraction = std::numeric_limits<double>::quiet_NaN();
};

struct SynthesisConfig {
  Vec target;                      // y
  double horizon = 0.25;           // T
  Variant variant = Variant::algorithm1;
  CycleConfig cycle;
  std::optional<BoundConstants> bounds;  // default: derived from the local data
  int max_cycles = 100000;
  int radius_directions = 360;
  bool evaluate_condition = true;  // per-cycle advisory condition check
};

struct SynthesisResult {
  Trajectory trajectory;
  PiecewiseConstantControl control;
  std::vector<WaypointState> waypoints;   // includes the implicit z_0 = x0
  std::vector<CycleDiagnostics> cycles;
  std::vector<CycleRecord> records;
  double radius = 0.0;       // r used by the run
  double final_error = 0.0;  // |x_final - y|
  Termination termination = Termination::max_cycles;
  double gamma = 0.0;        // finite-time accuracy bound at the executed N
  int cycles_executed = 0;
  bool epsilon_advisory_ok = true;  // eps > C_init dt^2 advisory
};

/// First steering input, matching the surrogate's optimal direction to first
/// order:  u = (1-eps) G(x0)^+ w / (||G(x0)^+|| |w|) with w the target offset
/// (drift-compensated in the finite-time variant).  Always admissible with
/// |u| <= 1 - eps.
inline Vec initial_control(const Mat& G_x0, const Vec& x0, const Vec& target, double eps,
                           Variant variant, const Vec& drift, double horizon) {
  Vec w = target - x0;
  if (variant == Variant::algorithm2) w -= horizon * drift;
  if (w.norm() <= 1e-12 * std::max(1.0, target.norm() + x0.norm()))
    throw TrivialTargetError("initial_control: target coincides with the start state");
  const Mat pinv = detail::pseudo_inverse(G_x0);
  const double pinv_norm = detail::pseudo_inverse_norm(G_x0);
  return (1.0 - eps) * (pinv * w) / (pinv_norm * w.norm());
}

/// Advance the waypoint parameter: the larger root of
///     theta^2 |y_ref|^2 - 2 theta <y_ref, anchor> + |anchor|^2 = r^2,
/// which exceeds theta_n whenever the anchor is strictly inside the r-ball
/// around the current waypoint.  `anchor` is relative to the path origin.
inline double next_waypoint(const Vec& anchor, const Vec& y_ref, double theta_n, double r) {
  if (anchor.size() != y_ref.size())
    throw DimensionError("next_waypoint: dimension mismatch");
  if ((anchor - theta_n * y_ref).norm() >= r)
    throw WaypointRegressionError(
        "next_waypoint: anchor did not move within r of the current waypoint");
  const double a2 = y_ref.squaredNorm();
  if (a2 == 0.0) throw ParameterError("next_waypoint: zero reference direction");
  const double bq = y_ref.dot(anchor);
  const double disc = bq * bq - a2 * (anchor.squaredNorm() - r * r);
  if (disc < 0.0)
    throw WaypointRegressionError("next_waypoint: no intersection with the r-sphere");
  const double theta = (bq + std::sqrt(disc)) / a2;
  if (!(theta > theta_n))
    throw WaypointRegressionError("next_waypoint: waypoint parameter failed to increase");
  return theta;
}

struct ConditionCheck {
  bool holds = false;
  double lhs = 0.0;
  double rhs = 0.0;
};

/// Sufficient per-cycle decrease condition
///   2 (M0(m+1)^2 dt + r Lmax) M0(m+1)^2 dt + mu(dt,eps)
///       <= (1-eps) (r - M0(m+1)^2 dt) (b - c|x| - 2|a|).
/// Advisory only; with conservative constants it typically fails even for
/// runs that succeed, so callers log it and keep going.
inline ConditionCheck check_condition(const ProxyParams& p, const CycleConfig& cfg,
                                      const BoundConstants& k, double state_norm,
                                      double radius) {
  const double m1 = cfg.input_dim + 1.0;
  const double md = k.M0 * m1 * m1 * cfg.dt;
  ConditionCheck out;
  out.lhs = 2.0 * (md + radius * k.L_max) * md + bound_mu(cfg, k);
  out.rhs = (1.0 - cfg.eps) * (radius - md) *
            (p.gain - p.decay * state_norm - 2.0 * p.drift.norm());
  out.holds = out.lhs <= out.rhs;
  return out;
}

/// Overload computing the learning radius itself.
inline ConditionCheck check_condition(const ProxyParams& p, const CycleConfig& cfg,
                                      const BoundConstants& k, double state_norm) {
  const double r =
      learning_radius(p, cfg.k, cfg.dt, cfg.input_dim, RadiusVariant::raw);
  return check_condition(p, cfg, k, state_norm, r);
}

/// Smallest drift-subtracted distance the surrogate travels over one
/// interval of length tau under a constant unit direction (r_bar).
inline double min_cycle_displacement(const ProxyParams& p, double tau, int n_dirs = 360) {
  if (!(tau > 0.0)) throw ParameterError("min_cycle_displacement: tau must be positive");
  if (p.drift.norm() == 0.0) return radial_closed_form(p.gain, p.decay, tau);
  double r_bar = std::numeric_limits<double>::infinity();
  for (const Vec& dir : spread_directions(p.image_basis, n_dirs)) {
    const ProxyFlow flow = integrate_proxy(p, dir, tau);
    r_bar =
        std::min(r_bar, (flow.trajectory.back_state() - tau * p.drift - p.origin).norm());
  }
  return r_bar;
}

/// Finite-time reachability accuracy bound
///   gamma = N nu + r c N nu dt + M0(m+1)^2 b dt^2
///           + 2 (M0(m+1)^2 dt^2 + r Lmax) M0(m+1)^2 dt^2 + mu^2,
/// with nu = M0(m+1)^2 dt - r_bar and r_bar the smallest drift-subtracted
/// distance the surrogate travels over one cycle under a constant unit
/// direction.
inline double gamma_bound(const ProxyParams& p, const CycleConfig& cfg,
                          const BoundConstants& k, int cycles, int n_dirs = 360) {
  if (cycles < 1) throw ParameterError("gamma_bound: need at least one cycle");
  const double tau = cfg.cycle_length();
  const double r_bar = min_cycle_displacement(p, tau, n_dirs);
  const double m1 = cfg.input_dim + 1.0;
  const double md = k.M0 * m1 * m1 * cfg.dt;
  const double nu = md - r_bar;
  const double r = learning_radius(p, cfg.k, cfg.dt, cfg.input_dim,
                                   RadiusVariant::drift_subtracted, n_dirs);
  const double mu = bound_mu(cfg, k);
  return cycles * nu + r * p.decay * cycles * nu * cfg.dt + md * p.gain * cfg.dt +
         2.0 * (md * cfg.dt + r * k.L_max) * (md * cfg.dt) + mu * mu;
}

/// One cycle's window for distance-derivative diagnostics.
struct CycleWindow {
  int index = 0;
  double t_begin = 0.0;
  double t_end = 0.0;
  Vec waypoint;  // absolute
};

struct LyapunovStats {
  int index = 0;
  double negative_fraction = std::numeric_limits<double>::quiet_NaN();
  int sample_count = 0;
  int violations = 0;
};

/// Finite-difference sign statistics of d/dt |x(t) - z_n|^2 per cycle
/// window.  The finite-time variant evaluates the drift-subtracted state
/// x(t) - a (t - t_start) instead.
inline std::vector<LyapunovStats> lyapunov_diagnostics(const Trajectory& traj,
                                                       const std::vector<CycleWindow>& windows,
                                                       const Vec& drift, Variant variant) {
  std::vector<LyapunovStats> out;
  out.reserve(windows.size());
  const double t0 = traj.empty() ? 0.0 : traj.t_begin();
  for (const CycleWindow& w : windows) {
    LyapunovStats stats;
    stats.index = w.index;
    const double slack = 1e-12 * std::max(1.0, std::abs(w.t_end));
    std::vector<double> d;
    for (std::size_t i = 0; i < traj.size(); ++i) {
      const double t = traj.times[i];
      if (t < w.t_begin - slack || t > w.t_end + slack) continue;
      Vec s = traj.states[i];
      if (variant == Variant::algorithm2) s -= (t - t0) * drift;
      d.push_back((s - w.waypoint).squaredNorm());
    }
    if (d.size() >= 2) {
      int neg = 0;
      for (std::size_t i = 0; i + 1 < d.size(); ++i)
        if (d[i + 1] - d[i] < 0.0) ++neg;
      stats.sample_count = static_cast<int>(d.size()) - 1;
      stats.violations = stats.sample_count - neg;
      stats.negative_fraction = static_cast<double>(neg) / stats.sample_count;
    }
    out.push_back(stats);
  }
  return out;
}

namespace detail {

inline SynthesisResult run_synthesis(PlantSimulator& sim, const LocalData& local,
                                     const SynthesisConfig& cfg) {
  cfg.cycle.validate();
  if (cfg.cycle.input_dim != sim.input_dim())
    throw DimensionError("synthesize: cycle input dimension must match the plant");
  if (cfg.target.size() != sim.state_dim())
    throw DimensionError("synthesize: target dimension must match the plant");
  if (cfg.max_cycles < 1) throw ParameterError("synthesize: max_cycles must be >= 1");

  const Vec x0 = sim.state();
  ProxyParams p = derive_proxy(local.f_x0, local.G_x0, local.lipschitz_f, local.lipschitz_G);
  p.origin = x0;

  // Reject targets whose unique surrogate control is undefined or clamps at
  // the domain boundary, and targets beyond the reachable radius of their ray.
  const Vec u_hat = unique_boundary_control(p, cfg.target, cfg.horizon);
  const ProxyFlow ref = integrate_proxy(p, u_hat, cfg.horizon);
  if (ref.clamped)
    throw TargetError("synthesize: target direction reaches the domain boundary");
  const double reach = (ref.trajectory.back_state() - cfg.horizon * p.drift - x0).norm();
  const double want = (cfg.target - cfg.horizon * p.drift - x0).norm();
  if (want > reach * (1.0 + 1e-6))
    throw TargetError("synthesize: target lies outside the guaranteed reachable set");

  const bool finite_time = cfg.variant == Variant::algorithm2;
  const Vec y_ref = finite_time ? Vec(cfg.target - cfg.horizon * p.drift - x0)
                                : Vec(cfg.target - x0);
  const double r = learning_radius(p, cfg.cycle.k, cfg.cycle.dt, cfg.cycle.input_dim,
                                   finite_time ? RadiusVariant::drift_subtracted
                                               : RadiusVariant::raw,
                                   cfg.radius_directions);
  const BoundConstants consts =
      cfg.bounds ? *cfg.bounds
                 : default_bound_constants(local.f_x0, local.G_x0, local.lipschitz_f,
                                           local.lipschitz_G, p.domain_radius(),
                                           cfg.target.norm());
  const double tau = cfg.cycle.cycle_length();

  SynthesisResult out;
  out.radius = r;
  out.epsilon_advisory_ok = cfg.cycle.epsilon_above_init_threshold();
  out.waypoints.push_back(WaypointState{0, 0.0, x0, x0, r});

  Vec u = initial_control(local.G_x0, x0, cfg.target, cfg.cycle.eps, cfg.variant, p.drift,
                          cfg.horizon);
  double theta = 0.0;
  Vec z_rel = Vec::Zero(x0.size());
  int fails = 0;
  bool approach = false;
  int n = 0;
  Termination term = Termination::max_cycles;

  while (true) {
    if (finite_time && n * tau > cfg.horizon - 1e-9 * tau) {
      term = Termination::horizon_reached;
      break;
    }
    if (n >= cfg.max_cycles) {
      term = Termination::max_cycles;
      break;
    }
    CycleRecord rec;
    bool exited = false;
    try {
      rec = sim.run_cycle(u, cfg.cycle);
    } catch (const DomainExitError&) {
      exited = true;
    }
    if (exited) {
      term = Termination::domain_exit;
      break;
    }

    Vec anchor_rel = rec.anchor_after() - x0;
    if (finite_time) anchor_rel -= ((n + 1) * tau) * p.drift;

    CycleDiagnostics diag;
    diag.index = n;
    diag.start_time = rec.start_time;
    diag.theta_active = theta;
    diag.z_active = x0 + z_rel;
    diag.anchor_distance = (anchor_rel - z_rel).norm();
    if (cfg.evaluate_condition) {
      const ConditionCheck cond =
          check_condition(p, cfg.cycle, consts, (rec.states.front() - x0).norm(), r);
      diag.condition_holds = cond.holds;
      diag.condition_lhs = cond.lhs;
      diag.condition_rhs = cond.rhs;
    }
    diag.bound_C_value = bound_C(cfg.cycle, consts);
    diag.bound_mu_value = bound_mu(cfg.cycle, consts);

    bool stop = false;
    if (!approach) {
      if (diag.anchor_distance < r) {
        theta = next_waypoint(anchor_rel, y_ref, theta, r);
        z_rel = theta * y_ref;
        fails = 0;
        diag.accepted = true;
        out.waypoints.push_back(
            WaypointState{n + 1, theta, Vec(x0 + z_rel), Vec(x0 + anchor_rel), r});
        if (!finite_time && (z_rel - y_ref).norm() < r) approach = true;
      } else if (++fails >= 3) {
        term = Termination::regressed;
        stop = true;
      }
    } else {
      // Waypoint already within r of the target: hold it and close in.
      if (diag.anchor_distance < r) {
        term = Termination::target_radius;
        stop = true;
      } else if (++fails >= 3) {
        term = Termination::regressed;
        stop = true;
      }
    }

    const Vec gradient = 2.0 * (anchor_rel - z_rel);
    if (gradient.norm() > 0.0) {
      const ArgminResult am = argmin_direction(rec, gradient);
      diag.objective = am.value;
      diag.lambda_star = am.lambda_star;
      if (!stop) u = am.degenerate ? rec.inputs[0] : Vec((1.0 - cfg.cycle.eps) * am.u_star);
    }

    out.records.push_back(std::move(rec));
    out.cycles.push_back(std::move(diag));
    ++n;
    if (stop) break;
  }

  out.termination = term;
  out.cycles_executed = n;
  out.trajectory = sim.trajectory();
  out.control = sim.control();
  out.final_error = (sim.state() - cfg.target).norm();
  out.gamma = gamma_bound(p, cfg.cycle, consts, std::max(1, n), cfg.radius_directions);

  // Distance-derivative statistics against the waypoint active in each cycle
  // (cycle 0 steers toward the target itself, not a waypoint, so it is
  // skipped).
  std::vector<CycleWindow> windows;
  for (std::size_t i = 1; i < out.cycles.size(); ++i)
    windows.push_back(CycleWindow{out.cycles[i].index, out.cycles[i].start_time,
                                  out.cycles[i].start_time + tau, out.cycles[i].z_active});
  const auto stats = lyapunov_diagnostics(out.trajectory, windows, p.drift, cfg.variant);
  for (std::size_t i = 0; i < stats.size(); ++i)
    out.cycles[i + 1].lyapunov_negative_fraction = stats[i].negative_fraction;
  return out;
}

}  // namespace detail

/// Reach a 2r neighborhood of the target, running until a waypoint lands
/// within r of it and the anchor follows.
inline SynthesisResult synthesize(PlantSimulator& sim, const LocalData& local,
                                  const SynthesisConfig& cfg) {
  if (cfg.variant != Variant::algorithm1)
    throw ParameterError("synthesize: config selects the finite-time variant");
  return detail::run_synthesis(sim, local, cfg);
}

/// Finite-time variant: drift-subtracted anchors track y - aT and the loop
/// stops once n(m+1)dt reaches the horizon.
inline SynthesisResult synthesize_finite_time(PlantSimulator& sim, const LocalData& local,
                                              const SynthesisConfig& cfg) {
  if (cfg.variant != Variant::algorithm2)
    throw ParameterError("synthesize_finite_time: config selects the plain variant");
  return detail::run_synthesis(sim, local, cfg);
}

}  // namespace grsreach
