#pragma once

// Learn-control cycle machinery.
//
// Within each cycle of length tau = (m+1) dt the loop applies a steering
// input u_{n,0} followed by m singly-perturbed copies u_{n,0} +/- eps e_j,
// records the state at every piece boundary, and recovers local velocity
// estimates from first differences.  Minimizing a linear functional of those
// estimates over the admissible inputs has a closed form, which is what the
// synthesis loop uses to pick the next steering input.

#include "grsreach/core.hpp"

#include <cmath>
#include <optional>
#include <vector>

namespace grsreach {

/// Base input too close to the unit sphere to fit the perturbations.
struct InadmissibleBaseError : Error {
  using Error::Error;
};

/// Tunable parameters of one learn-control cycle.
struct CycleConfig {
  double dt = 1e-4;   // duration of one constant piece
  double eps = 0.01;  // perturbation amplitude, in (0, 1)
  double k = 1.0;     // learning-radius horizon multiplier, >= 1
  int input_dim = 0;  // m

  // Advisory initialization threshold eps > C dt^2; never enforced.
  double init_threshold_constant = 100.0;

  double cycle_length() const { return (input_dim + 1) * dt; }  // tau
  bool epsilon_above_init_threshold() const {
    return eps > init_threshold_constant * dt * dt;
  }

  void validate() const {
    if (!(dt > 0.0)) throw ParameterError("cycle config: dt must be positive");
    if (!(eps > 0.0 && eps < 1.0)) throw ParameterError("cycle config: eps must be in (0,1)");
    if (!(k >= 1.0)) throw ParameterError("cycle config: k must be >= 1");
    if (input_dim < 1) throw ParameterError("cycle config: input dimension must be >= 1");
  }
};

/// Everything observed during one learn-control cycle: the m+1 constant
/// inputs and the m+2 states sampled at the piece boundaries.
struct CycleRecord {
  int index = 0;           // n
  double start_time = 0.0; // tau_n
  double dt = 0.0;
  std::vector<Vec> inputs; // u_{n,0} .. u_{n,m}
  std::vector<Vec> states; // x_{n,0} .. x_{n,m+1}

  int input_dim() const { return inputs.empty() ? 0 : static_cast<int>(inputs.front().size()); }

  /// State closing the cycle; the next cycle's anchor.
  const Vec& anchor_after() const { return states.back(); }

  /// Perturbation sign of input j >= 1 relative to the base input.
  double sign(int j) const {
    return inputs[static_cast<std::size_t>(j)](j - 1) >= inputs[0](j - 1) ? 1.0 : -1.0;
  }

  /// Perturbation amplitude recovered from the record.
  double amplitude() const { return std::abs(inputs[1](0) - inputs[0](0)); }
};

/// The m+1 affinely independent constant inputs of a cycle.  Each
/// perturbation moves along a coordinate axis, away from the base input's
/// component so the result stays admissible: u_j = u0 + s_j eps e_j with
/// s_j = -sign(u0 . e_j) and s_j = +1 on a zero component.
inline std::vector<Vec> perturbation_inputs(const Vec& u0, double eps) {
  if (!(eps > 0.0 && eps < 1.0))
    throw ParameterError("perturbation_inputs: eps must be in (0,1)");
  if (u0.norm() > 1.0 - eps + 1e-12)
    throw InadmissibleBaseError("perturbation_inputs: |u0| must be <= 1 - eps");
  std::vector<Vec> inputs;
  inputs.reserve(static_cast<std::size_t>(u0.size()) + 1);
  inputs.push_back(u0);
  for (Eigen::Index j = 0; j < u0.size(); ++j) {
    Vec u = u0;
    const double s = u0(j) > 0.0 ? -1.0 : 1.0;
    u(j) += s * eps;
    inputs.push_back(std::move(u));
  }
  return inputs;
}

/// Run one cycle on the true system: hold each input for dt, sample states at
/// the piece boundaries.  The optional sink collects the fine trajectory.
inline CycleRecord run_cycle(const ControlAffineField& field, const Vec& x_start,
                             double t_start, const Vec& u0, const CycleConfig& cfg,
                             int substep_divisor = 20, const GuardRegion& guard = {},
                             Trajectory* sink = nullptr) {
  cfg.validate();
  if (u0.size() != field.input_dim)
    throw DimensionError("run_cycle: base input dimension mismatch");
  CycleRecord rec;
  rec.start_time = t_start;
  rec.dt = cfg.dt;
  rec.inputs = perturbation_inputs(u0, cfg.eps);
  rec.states.push_back(x_start);
  const double substep = cfg.dt / substep_divisor;
  Vec x = x_start;
  for (int j = 0; j <= cfg.input_dim; ++j) {
    const double ta = t_start + j * cfg.dt;
    const double tb = t_start + (j + 1) * cfg.dt;
    const auto piece = PiecewiseConstantControl::constant(rec.inputs[static_cast<std::size_t>(j)], ta, tb);
    const Trajectory leg = integrate(field, piece, x, ta, tb, substep, guard);
    x = leg.back_state();
    rec.states.push_back(x);
    if (sink != nullptr) sink->extend(leg);
  }
  return rec;
}

/// Finite-difference velocity estimate at the cycle's closing anchor for the
/// parameterized input u_lambda = sum_j lambda_j u_{n,j}:
///     v~(u_lambda) = sum_j lambda_j (x_{n,j+1} - x_{n,j}) / dt.
/// The weights must sum to one (affine combination).
inline Vec velocity_estimate(const CycleRecord& rec, const Vec& lambda) {
  const int m = rec.input_dim();
  if (lambda.size() != m + 1)
    throw DimensionError("velocity_estimate: lambda must have m+1 entries");
  if (std::abs(lambda.sum() - 1.0) > 1e-12)
    throw ParameterError("velocity_estimate: weights must sum to 1");
  Vec v = Vec::Zero(rec.states.front().size());
  for (int j = 0; j <= m; ++j)
    v += lambda(j) * (rec.states[static_cast<std::size_t>(j) + 1] -
                      rec.states[static_cast<std::size_t>(j)]) /
         rec.dt;
  return v;
}

/// Constants entering the approximation and suboptimality bounds.  M0 bounds
/// sup |f| and sup ||G|| over the validity ball, L is a Lipschitz constant of
/// the squared-distance objective there; M1 is an auxiliary constant of the
/// suboptimality bound that defaults to M0.
struct BoundConstants {
  double M0 = 1.0;
  double M1 = 1.0;
  double L = 1.0;
  double L_max = 1.0;
};

/// Conservative defaults extending the known local data over the validity
/// ball of radius rho = b/c:  M0 = max(|f(x0)| + L_f rho, ||G(x0)|| + L_G rho),
/// L = 2(rho + |y|) for a target at distance |y|, M1 = M0.
inline BoundConstants default_bound_constants(const Vec& f_x0, const Mat& G_x0,
                                              double lipschitz_f, double lipschitz_G,
                                              double domain_radius, double target_norm) {
  BoundConstants k;
  const double g_norm = G_x0.operatorNorm();
  k.M0 = std::max(f_x0.norm() + lipschitz_f * domain_radius,
                  g_norm + lipschitz_G * domain_radius);
  k.M1 = k.M0;
  k.L = 2.0 * (domain_radius + target_norm);
  k.L_max = std::max(lipschitz_f, lipschitz_G);
  return k;
}

/// Estimation-error bound for parameterized inputs:
///     C(dt, eps) = 2 M0 Lmax (m+1)^3 dt (4 m^{3/2} + eps) / eps.
inline double bound_C(const CycleConfig& cfg, const BoundConstants& k) {
  if (!(cfg.eps > 0.0)) throw ParameterError("bound_C: eps must be positive");
  const double m = cfg.input_dim;
  const double m1 = m + 1.0;
  return 2.0 * k.M0 * k.L_max * m1 * m1 * m1 * cfg.dt *
         (4.0 * std::pow(m, 1.5) + cfg.eps) / cfg.eps;
}

/// Suboptimality bound of the parameterized argmin against the full ball:
///     mu(dt, eps) = 6 L (M0+1)(M1+1)(m+1)^3 (1 + 4 m sqrt(m)/eps) dt
///                   + L M0 (m+1) dt.
inline double bound_mu(const CycleConfig& cfg, const BoundConstants& k) {
  if (!(cfg.eps > 0.0)) throw ParameterError("bound_mu: eps must be positive");
  const double m = cfg.input_dim;
  const double m1 = m + 1.0;
  return 6.0 * k.L * (k.M0 + 1.0) * (k.M1 + 1.0) * m1 * m1 * m1 *
             (1.0 + 4.0 * m * std::sqrt(m) / cfg.eps) * cfg.dt +
         k.L * k.M0 * m1 * cfg.dt;
}

/// Result of the closed-form directional argmin over parameterized inputs.
struct ArgminResult {
  Vec u_star;       // minimizing admissible input
  Vec lambda_star;  // affine weights realizing u_star
  double value;     // objective <g, v~(u_lambda*)>
  bool degenerate = false;  // objective flat in the input
};

/// Minimize <g, v~(u_lambda)> over affine weights with u_lambda admissible.
///
/// Writing w_j = (x_{n,j+1} - x_{n,j})/dt, the objective is affine in u via
/// h_j = s_j <g, w_j - w_0> / eps, so the minimizer over the unit ball is
/// u* = -h/|h| and the weights follow from the perturbation structure.
inline ArgminResult argmin_direction(const CycleRecord& rec, const Vec& gradient) {
  const int m = rec.input_dim();
  if (static_cast<int>(rec.states.size()) != m + 2)
    throw ParameterError("argmin_direction: incomplete cycle record");
  if (gradient.norm() == 0.0)
    throw ParameterError("argmin_direction: zero gradient");
  const double eps = rec.amplitude();
  std::vector<Vec> w(static_cast<std::size_t>(m) + 1);
  for (int j = 0; j <= m; ++j)
    w[static_cast<std::size_t>(j)] =
        (rec.states[static_cast<std::size_t>(j) + 1] - rec.states[static_cast<std::size_t>(j)]) /
        rec.dt;

  Vec h(m);
  double h_scale = 0.0;
  for (int j = 1; j <= m; ++j) {
    h(j - 1) = rec.sign(j) * gradient.dot(w[static_cast<std::size_t>(j)] - w[0]) / eps;
    h_scale = std::max(h_scale,
                       gradient.norm() * (w[static_cast<std::size_t>(j)] - w[0]).norm() / eps);
  }

  ArgminResult out;
  if (h.norm() <= 1e-13 * std::max(1.0, h_scale)) {
    out.degenerate = true;
    out.u_star = rec.inputs[0];
    out.lambda_star = Vec::Zero(m + 1);
    out.lambda_star(0) = 1.0;
    out.value = gradient.dot(w[0]);
    return out;
  }
  out.u_star = -h / h.norm();
  out.lambda_star = Vec(m + 1);
  double tail = 0.0;
  for (int j = 1; j <= m; ++j) {
    out.lambda_star(j) = rec.sign(j) * (out.u_star(j - 1) - rec.inputs[0](j - 1)) / eps;
    tail += out.lambda_star(j);
  }
  out.lambda_star(0) = 1.0 - tail;
  out.value = gradient.dot(velocity_estimate(rec, out.lambda_star));
  return out;
}

}  // namespace grsreach
