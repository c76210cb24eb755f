#pragma once

// Core state-space types and a deterministic fixed-step RK4 integrator for
// control-affine vector fields.  Everything here is pure: identical inputs
// produce bit-identical outputs.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace grsreach {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionError : Error {
  using Error::Error;
};

struct ParameterError : Error {
  using Error::Error;
};

/// Thrown when an integrated state leaves the configured guard region.
struct DomainExitError : Error {
  DomainExitError(double t, const std::string& msg) : Error(msg), exit_time(t) {}
  double exit_time;
};

/// Control-affine dynamics  dx/dt = f(x) + G(x) u  with x in R^d, u in R^m.
/// The evaluators are treated as a black box; only Lipschitz bounds on f and
/// G are assumed known.
struct ControlAffineField {
  int state_dim = 0;  // d
  int input_dim = 0;  // m
  std::function<Vec(const Vec&)> f;
  std::function<Mat(const Vec&)> G;
  double lipschitz_f = 0.0;
  double lipschitz_G = 0.0;
};

/// f(x) + G(x) u, with dimension checks on both arguments.
inline Vec evaluate_velocity(const ControlAffineField& field, const Vec& x, const Vec& u) {
  if (x.size() != field.state_dim)
    throw DimensionError("evaluate_velocity: state has dimension " + std::to_string(x.size()) +
                         ", field expects " + std::to_string(field.state_dim));
  if (u.size() != field.input_dim)
    throw DimensionError("evaluate_velocity: input has dimension " + std::to_string(u.size()) +
                         ", field expects " + std::to_string(field.input_dim));
  return field.f(x) + field.G(x) * u;
}

/// Piecewise-constant input signal: value u_i holds on [t_i, t_{i+1}).
/// Admissible inputs live in the closed unit ball of R^m.
class PiecewiseConstantControl {
 public:
  PiecewiseConstantControl() = default;

  PiecewiseConstantControl(std::vector<double> breakpoints, std::vector<Vec> values) {
    if (breakpoints.size() < 2 || values.size() + 1 != breakpoints.size())
      throw ParameterError("control: need K+1 breakpoints for K pieces");
    breakpoints_ = std::move(breakpoints);
    for (std::size_t i = 0; i + 1 < breakpoints_.size(); ++i)
      if (!(breakpoints_[i] < breakpoints_[i + 1]))
        throw ParameterError("control: breakpoints must be strictly increasing");
    for (auto& u : values) push_value(std::move(u));
  }

  /// Single constant piece over [t_begin, t_end).
  static PiecewiseConstantControl constant(const Vec& u, double t_begin, double t_end) {
    return PiecewiseConstantControl({t_begin, t_end}, {u});
  }

  /// Start an empty signal at time t0; extend with append().
  static PiecewiseConstantControl starting_at(double t0) {
    PiecewiseConstantControl c;
    c.breakpoints_.push_back(t0);
    return c;
  }

  /// Extend the signal by one piece ending at t_end.
  void append(double t_end, const Vec& u) {
    if (breakpoints_.empty()) breakpoints_.push_back(0.0);
    if (!(t_end > breakpoints_.back()))
      throw ParameterError("control: appended piece must advance time");
    push_value(u);
    breakpoints_.push_back(t_end);
  }

  int input_dim() const { return values_.empty() ? 0 : static_cast<int>(values_.front().size()); }
  std::size_t piece_count() const { return values_.size(); }
  double t_begin() const { return breakpoints_.front(); }
  double t_end() const { return breakpoints_.back(); }
  double breakpoint(std::size_t i) const { return breakpoints_.at(i); }
  const Vec& piece_value(std::size_t i) const { return values_.at(i); }

  /// Right-continuous evaluation; times at or past the last breakpoint get
  /// the final piece's value.
  const Vec& value_at(double t) const {
    if (values_.empty()) throw ParameterError("control: empty signal");
    if (t < breakpoints_.front())
      throw ParameterError("control: time before signal start");
    // first breakpoint strictly greater than t
    auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t);
    std::size_t idx = static_cast<std::size_t>(it - breakpoints_.begin());
    if (idx == 0) idx = 1;
    if (idx > values_.size()) idx = values_.size();
    return values_[idx - 1];
  }

 private:
  void push_value(Vec u) {
    if (!values_.empty() && u.size() != values_.front().size())
      throw DimensionError("control: inconsistent input dimension");
    if (u.norm() > 1.0 + 1e-12)
      throw ParameterError("control: input leaves the unit ball, |u| = " +
                           std::to_string(u.norm()));
    values_.push_back(std::move(u));
  }

  std::vector<double> breakpoints_;
  std::vector<Vec> values_;
};

/// Sampled solution of an ODE.  Times are strictly increasing and contiguous
/// at the recorded substep resolution.
struct Trajectory {
  std::vector<double> times;
  std::vector<Vec> states;
  double substep = 0.0;

  std::size_t size() const { return times.size(); }
  bool empty() const { return times.empty(); }
  double t_begin() const { return times.front(); }
  double t_end() const { return times.back(); }
  const Vec& front_state() const { return states.front(); }
  const Vec& back_state() const { return states.back(); }

  void append_sample(double t, const Vec& x) {
    times.push_back(t);
    states.push_back(x);
  }

  /// Append another trajectory whose first sample coincides with our last.
  void extend(const Trajectory& tail) {
    std::size_t start = 0;
    if (!empty() && !tail.empty() && tail.times.front() == times.back()) start = 1;
    for (std::size_t i = start; i < tail.size(); ++i)
      append_sample(tail.times[i], tail.states[i]);
  }
};

/// Closed ball the integrated state must stay inside.  A default-constructed
/// guard is unbounded.
struct GuardRegion {
  Vec center;
  double radius = std::numeric_limits<double>::infinity();

  static GuardRegion ball(Vec c, double r) { return GuardRegion{std::move(c), r}; }

  bool enabled() const { return center.size() > 0 && std::isfinite(radius); }
  bool contains(const Vec& x) const {
    return !enabled() || (x - center).norm() <= radius;
  }
};

namespace detail {

/// One classical RK4 step of size h for dx/dt = velocity(x).
template <typename Velocity>
Vec rk4_step(const Velocity& velocity, const Vec& x, double h) {
  const Vec k1 = velocity(x);
  const Vec k2 = velocity(x + (0.5 * h) * k1);
  const Vec k3 = velocity(x + (0.5 * h) * k2);
  const Vec k4 = velocity(x + h * k3);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// Fixed-step RK4 over [t_begin, t_end] emitting every substep.  The final
/// substep is shortened when the substep does not divide the interval, so
/// integration lands on t_end exactly.
template <typename Velocity, typename Sink>
void integrate_fixed_rk4(const Velocity& velocity, Vec x, double t_begin, double t_end,
                         double substep, Sink&& emit) {
  if (!(substep > 0.0)) throw ParameterError("integrate: substep must be positive");
  if (t_end < t_begin) throw ParameterError("integrate: reversed time span");
  emit(t_begin, x);
  if (t_end == t_begin) return;
  const double length = t_end - t_begin;
  const auto steps =
      static_cast<std::size_t>(std::max(1.0, std::ceil(length / substep - 1e-9)));
  double t = t_begin;
  for (std::size_t s = 1; s <= steps; ++s) {
    const double t_next = (s == steps) ? t_end : t_begin + static_cast<double>(s) * substep;
    x = rk4_step(velocity, x, t_next - t);
    t = t_next;
    emit(t, x);
  }
}

}  // namespace detail

/// Integrate the controlled field over [t_begin, t_end] with fixed substep.
/// Samples are emitted at every substep and at every control breakpoint; the
/// final sample time equals t_end exactly.  Leaving the guard region aborts
/// with DomainExitError carrying the exit time.
inline Trajectory integrate(const ControlAffineField& field,
                            const PiecewiseConstantControl& control, const Vec& x0,
                            double t_begin, double t_end, double substep,
                            const GuardRegion& guard = {}) {
  if (x0.size() != field.state_dim)
    throw DimensionError("integrate: initial state dimension mismatch");
  if (control.piece_count() == 0) throw ParameterError("integrate: empty control");
  if (control.input_dim() != field.input_dim)
    throw DimensionError("integrate: control input dimension mismatch");
  const double slack = 1e-9 * std::max(1.0, std::abs(t_end) + std::abs(t_begin));
  if (control.t_begin() > t_begin + slack || control.t_end() < t_end - slack)
    throw ParameterError("integrate: control does not cover the time span");

  Trajectory traj;
  traj.substep = substep;
  auto emit = [&](double t, const Vec& x) {
    traj.append_sample(t, x);
    if (!guard.contains(x))
      throw DomainExitError(t, "integrate: state left the guard region at t = " +
                                   std::to_string(t));
  };

  emit(t_begin, x0);
  if (t_end == t_begin) return traj;

  Vec x = x0;
  double t = t_begin;
  for (std::size_t i = 0; i < control.piece_count(); ++i) {
    const double seg_begin = std::max(control.breakpoint(i), t_begin);
    const double seg_end = std::min(control.breakpoint(i + 1), t_end);
    if (!(seg_end > seg_begin)) continue;
    const Vec& u = control.piece_value(i);
    auto velocity = [&](const Vec& s) -> Vec { return field.f(s) + field.G(s) * u; };
    const double length = seg_end - seg_begin;
    const auto steps =
        static_cast<std::size_t>(std::max(1.0, std::ceil(length / substep - 1e-9)));
    for (std::size_t s = 1; s <= steps; ++s) {
      const double t_next =
          (s == steps) ? seg_end : seg_begin + static_cast<double>(s) * substep;
      x = detail::rk4_step(velocity, x, t_next - t);
      t = t_next;
      emit(t, x);
    }
    if (t >= t_end) break;
  }
  return traj;
}

}  // namespace grsreach
