#pragma once

// Property suites over the surrogate, the learner, the synthesis loop, and
// the quadrotor benchmark.  Each check recomputes its expectation through an
// independent route (closed forms, brute-force sampling, true-field
// evaluation) and compares at a pinned tolerance.  The suites double as the
// CLI `verify` command and as the backbone of the acceptance tests.

#include "grsreach/casestudy.hpp"
#include "grsreach/core.hpp"
#include "grsreach/learner.hpp"
#include "grsreach/proxy.hpp"
#include "grsreach/synthesizer.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <string>
#include <vector>

namespace grsreach {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

/// Pinned tolerances of the property suites.  corrupt() shrinks them to
/// impossible values; it exists so the failure path of the verification
/// driver can be exercised on a correct build.
struct VerifyTolerances {
  double collinearity = 1e-8;        // relative cross-component residual
  double scaling = 1e-7;             // spatial/temporal scaling residual
  double radial_oracle = 1e-8;       // closed form vs integrated radius
  double monotonicity_slack = 1e-10;
  double argmin_slack = 1e-9;        // relative brute-force slack
  double radius_relative = 0.15;     // learning radius vs reference values
  double lyapunov_fraction = 0.99;
  int directions = 360;
  int argmin_samples = 10000;

  VerifyTolerances corrupt() const {
    VerifyTolerances t = *this;
    t.collinearity = t.scaling = t.radial_oracle = t.monotonicity_slack = 0.0;
    t.argmin_slack = 0.0;
    t.radius_relative = 0.0;
    t.lyapunov_fraction = 1.1;
    return t;
  }
};

inline bool all_pass(const std::vector<CheckResult>& results) {
  for (const CheckResult& r : results)
    if (!r.pass) return false;
  return true;
}

namespace detail {

inline std::string describe(double value, double tol) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "worst %.3g (tol %.3g)", value, tol);
  return buf;
}

inline ProxyParams quadrotor_proxy() {
  const ControlAffineField field = build_quadrotor();
  const Vec x0 = Vec::Zero(2);
  const LocalData local = LocalData::probe(field, x0);
  return derive_proxy(local.f_x0, local.G_x0, local.lipschitz_f, local.lipschitz_G);
}

/// Deterministic low-discrepancy samples of the unit ball in R^2
/// (Halton bases 2 and 3 through the polar map).
inline std::vector<Vec> halton_ball_2d(int count) {
  auto halton = [](std::uint64_t index, std::uint64_t base) {
    double result = 0.0, f = 1.0 / static_cast<double>(base);
    while (index > 0) {
      result += f * static_cast<double>(index % base);
      index /= base;
      f /= static_cast<double>(base);
    }
    return result;
  };
  std::vector<Vec> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 1; i <= count; ++i) {
    const double radius = std::sqrt(halton(static_cast<std::uint64_t>(i), 2));
    const double angle = 2.0 * std::numbers::pi * halton(static_cast<std::uint64_t>(i), 3);
    Vec u(2);
    u << radius * std::cos(angle), radius * std::sin(angle);
    out.push_back(std::move(u));
  }
  return out;
}

inline ScenarioRun reference_scenario_run(char id = 'A', double angle = 30.0) {
  return run_scenario(id, angle);
}

}  // namespace detail

/// Surrogate-flow properties on 360-direction sweeps.
inline std::vector<CheckResult> verify_proxy(const VerifyTolerances& tol = {}) {
  std::vector<CheckResult> results;
  const ProxyParams with_drift = detail::quadrotor_proxy();
  ProxyParams drift_free = with_drift;
  drift_free.drift = Vec::Zero(2);
  const double horizon = 0.25;
  const auto dirs = spread_directions(with_drift.image_basis, tol.directions);

  // Drift-subtracted states stay on the ray spanned by the commanded
  // direction, at every sample of every direction.
  {
    double worst = 0.0;
    for (const Vec& dir : dirs) {
      const ProxyFlow flow = integrate_proxy(with_drift, dir, horizon);
      for (std::size_t i = 0; i < flow.trajectory.size(); ++i) {
        const double t = flow.trajectory.times[i];
        const Vec s = flow.trajectory.states[i] - t * with_drift.drift - with_drift.origin;
        const double residual = (s - s.dot(dir) * dir).norm();
        const double scale = std::max(flow.trajectory.states[i].norm(), 1e-12);
        worst = std::max(worst, residual / scale);
      }
    }
    results.push_back({"proxy.collinearity", worst <= tol.collinearity,
                       detail::describe(worst, tol.collinearity)});
  }

  // Scaling a drift-free amplitude by k matches running k times longer.
  {
    double worst = 0.0;
    const double t_short = 0.05;
    for (const double k : {2.0, 5.0}) {
      for (const Vec& dir : dirs) {
        const Vec scaled_end =
            integrate_proxy(drift_free, Vec(k * dir), t_short).trajectory.back_state();
        const Vec slow_end =
            integrate_proxy(drift_free, dir, k * t_short).trajectory.back_state();
        worst = std::max(worst, (scaled_end - slow_end).norm());
      }
    }
    results.push_back(
        {"proxy.scaling", worst <= tol.scaling, detail::describe(worst, tol.scaling)});
  }

  // Integrated drift-free radius against the closed form.
  {
    double worst = 0.0;
    const double expected = radial_closed_form(drift_free.gain, drift_free.decay, horizon);
    for (const Vec& dir : dirs) {
      const Vec end = integrate_proxy(drift_free, dir, horizon).trajectory.back_state();
      worst = std::max(worst, std::abs((end - drift_free.origin).norm() - expected));
    }
    results.push_back({"proxy.radial_oracle", worst <= tol.radial_oracle,
                       detail::describe(worst, tol.radial_oracle)});
  }

  // A horizon-T boundary point keeps a positive margin at earlier times.
  {
    bool pass = true;
    double worst_margin = std::numeric_limits<double>::infinity();
    for (const Vec& dir : dirs) {
      const ProxyFlow flow = integrate_proxy(with_drift, dir, horizon);
      const Vec& y = flow.trajectory.back_state();
      const double y_norm = (y - with_drift.origin).norm();
      if (y_norm >= with_drift.domain_radius()) continue;  // only interior points
      const std::size_t steps_total = flow.trajectory.size() - 1;
      for (int tenth = 1; tenth <= 9; ++tenth) {
        const std::size_t idx = steps_total * static_cast<std::size_t>(tenth) / 10;
        const double t = flow.trajectory.times[idx];
        const double gap = (flow.trajectory.states[idx] - y).norm();
        const double required =
            0.5 * (horizon - t) * (with_drift.gain - with_drift.decay * y_norm);
        worst_margin = std::min(worst_margin, gap - required);
        if (gap < required) pass = false;
      }
    }
    results.push_back({"proxy.boundary_not_early", pass,
                       detail::describe(worst_margin, 0.0) + " margin above requirement"});
  }

  // Drift-subtracted displacement grows with the horizon, per direction.
  {
    const GrsBoundary early = grs_boundary(with_drift, 0.1, tol.directions);
    const GrsBoundary late = grs_boundary(with_drift, horizon, tol.directions);
    double worst = 0.0;
    for (std::size_t i = 0; i < early.size(); ++i) {
      const double d1 = (early.endpoints[i] - 0.1 * with_drift.drift).norm();
      const double d2 = (late.endpoints[i] - horizon * with_drift.drift).norm();
      worst = std::max(worst, d1 - d2);
    }
    results.push_back({"proxy.growth_monotonicity", worst <= tol.monotonicity_slack,
                       detail::describe(worst, tol.monotonicity_slack)});
  }
  return results;
}

/// Learner bounds checked on every cycle of a logged benchmark run, with the
/// true field as the test oracle.
inline std::vector<CheckResult> verify_learner(const VerifyTolerances& tol = {}) {
  std::vector<CheckResult> results;
  const ControlAffineField field = build_quadrotor();
  const ScenarioRun run = detail::reference_scenario_run();
  const Scenario sc = run.scenario;
  CycleConfig cycle;
  cycle.dt = sc.dt;
  cycle.eps = sc.eps;
  cycle.k = sc.k;
  cycle.input_dim = 2;
  const ProxyParams p = detail::quadrotor_proxy();
  const LocalData local = LocalData::probe(field, Vec::Zero(2));
  const BoundConstants consts = default_bound_constants(
      local.f_x0, local.G_x0, local.lipschitz_f, local.lipschitz_G, p.domain_radius(),
      run.target.norm());
  const int m = cycle.input_dim;
  const double m1 = m + 1.0;

  double worst1 = -1e300, worst2 = -1e300, worst3 = -1e300, worst_est = -1e300;
  double worst_argmin = -1e300;
  bool ranks_ok = true;
  const auto ball = detail::halton_ball_2d(tol.argmin_samples);

  for (std::size_t ci = 0; ci < run.result.records.size(); ++ci) {
    const CycleRecord& rec = run.result.records[ci];
    const Vec& anchor = rec.anchor_after();

    // State excursion bound within the cycle.
    for (int j = 0; j <= m + 1; ++j)
      for (int kk = 0; kk <= m + 1; ++kk) {
        const double lhs = (rec.states[static_cast<std::size_t>(j)] -
                            rec.states[static_cast<std::size_t>(kk)])
                               .norm();
        const double rhs = consts.M0 * m1 * std::abs(j - kk) * cycle.dt;
        worst1 = std::max(worst1, lhs - rhs);
      }

    for (int j = 0; j <= m; ++j) {
      const Vec& uj = rec.inputs[static_cast<std::size_t>(j)];
      const Vec& xa = rec.states[static_cast<std::size_t>(j)];
      const Vec& xb = rec.states[static_cast<std::size_t>(j) + 1];
      // First-difference velocity against the endpoint velocity.
      const Vec diff = (xb - xa) / cycle.dt;
      const double lhs2 = (diff - evaluate_velocity(field, xb, uj)).norm();
      worst2 = std::max(worst2, lhs2 - consts.M0 * consts.L_max * m1 * m1 * cycle.dt / 2.0);
      // Velocity transport from the piece endpoint to the cycle anchor.
      const double lhs3 =
          (evaluate_velocity(field, xb, uj) - evaluate_velocity(field, anchor, uj)).norm();
      worst3 = std::max(worst3, lhs3 - consts.M0 * consts.L_max * m1 * m1 * m1 * cycle.dt);
    }

    // Estimation error of the chosen parameterized input.
    const CycleDiagnostics& diag = run.result.cycles[ci];
    if (diag.lambda_star.size() == m + 1) {
      Vec u_lambda = Vec::Zero(m);
      for (int j = 0; j <= m; ++j)
        u_lambda += diag.lambda_star(j) * rec.inputs[static_cast<std::size_t>(j)];
      const Vec estimate = velocity_estimate(rec, diag.lambda_star);
      const double err = (estimate - evaluate_velocity(field, anchor, u_lambda)).norm();
      worst_est = std::max(worst_est, err - bound_C(cycle, consts));
    }

    // Closed-form argmin against a brute-force sweep of the admissible ball.
    const Vec gradient = 2.0 * (anchor - diag.z_active);
    if (gradient.norm() > 0.0) {
      const ArgminResult am = argmin_direction(rec, gradient);
      double sampled_best = std::numeric_limits<double>::infinity();
      const double eps = rec.amplitude();
      double w_scale = 0.0;
      for (int j = 0; j <= m; ++j)
        w_scale = std::max(w_scale, ((rec.states[static_cast<std::size_t>(j) + 1] -
                                      rec.states[static_cast<std::size_t>(j)]) /
                                     cycle.dt)
                                        .norm());
      for (const Vec& u : ball) {
        Vec lambda(m + 1);
        double tail = 0.0;
        for (int j = 1; j <= m; ++j) {
          lambda(j) = rec.sign(j) * (u(j - 1) - rec.inputs[0](j - 1)) / eps;
          tail += lambda(j);
        }
        lambda(0) = 1.0 - tail;
        sampled_best = std::min(sampled_best, gradient.dot(velocity_estimate(rec, lambda)));
      }
      const double slack = tol.argmin_slack * gradient.norm() * w_scale;
      worst_argmin = std::max(worst_argmin, am.value - (sampled_best + slack));
    }

    // The m difference vectors must span the input space.
    Mat diffs(m, m);
    for (int j = 1; j <= m; ++j)
      diffs.col(j - 1) = rec.inputs[static_cast<std::size_t>(j)] - rec.inputs[0];
    if (detail::svd_with_rank(diffs).rank != m) ranks_ok = false;
  }

  results.push_back({"learner.precision_state_excursion", worst1 <= 0.0,
                     detail::describe(worst1, 0.0) + " slack to bound"});
  results.push_back({"learner.precision_first_difference", worst2 <= 0.0,
                     detail::describe(worst2, 0.0) + " slack to bound"});
  results.push_back({"learner.precision_velocity_transport", worst3 <= 0.0,
                     detail::describe(worst3, 0.0) + " slack to bound"});
  results.push_back({"learner.estimate_within_C", worst_est <= 0.0,
                     detail::describe(worst_est, 0.0) + " slack to bound"});
  results.push_back({"learner.argmin_beats_sampling", worst_argmin <= 0.0,
                     detail::describe(worst_argmin, 0.0) + " above sampled minimum"});
  results.push_back({"learner.affine_independence", ranks_ok,
                     ranks_ok ? "difference matrices have full rank" : "rank deficiency"});
  return results;
}

/// Waypoint-chain and termination guarantees of the synthesis loop.
inline std::vector<CheckResult> verify_synth(const VerifyTolerances& tol = {}) {
  std::vector<CheckResult> results;

  // Benchmark run: waypoint parameters strictly increase and every accepted
  // transition lands in [r - |anchor - z_n|, 2r).
  {
    const ScenarioRun run = detail::reference_scenario_run();
    const auto& wps = run.result.waypoints;
    bool theta_ok = true, chain_ok = true;
    const double r = run.result.radius;
    for (std::size_t i = 1; i < wps.size(); ++i) {
      if (!(wps[i].theta > wps[i - 1].theta)) theta_ok = false;
      const double step = (wps[i].waypoint - wps[i - 1].waypoint).norm();
      const double approach = (wps[i].anchor - wps[i - 1].waypoint).norm();
      if (step < r - approach - 1e-9 * r || step >= 2.0 * r) chain_ok = false;
    }
    results.push_back({"synth.theta_strictly_increasing", theta_ok,
                       std::to_string(wps.size()) + " waypoints"});
    results.push_back({"synth.waypoint_step_bounds", chain_ok,
                       "r - |anchor - z_n| <= |z_{n+1} - z_n| < 2r"});
    // Finite termination: each accepted advance covers at least r minus the
    // worst anchor gap, so the accepted count is bounded by the path length.
    {
      double worst_gap = 0.0;
      for (std::size_t i = 1; i < wps.size(); ++i)
        worst_gap = std::max(worst_gap, (wps[i].anchor - wps[i - 1].waypoint).norm());
      const double budget = run.target.norm() / (r - worst_gap);
      const auto accepted = static_cast<double>(wps.size() - 1);
      const bool bounded = accepted <= std::ceil(budget) + 1.0;
      results.push_back({"synth.termination_bound", bounded,
                         std::to_string(wps.size() - 1) + " accepted cycles vs ceil(" +
                             std::to_string(budget) + ") + 1"});
    }
    const bool acc = run.result.termination != Termination::target_radius ||
                     run.result.final_error < 2.0 * r;
    results.push_back({"synth.termination_accuracy", acc,
                       "final error " + std::to_string(run.result.final_error) +
                           " vs 2r = " + std::to_string(2.0 * r)});
    bool lyap_ok = true;
    double worst_fraction = 1.0;
    for (std::size_t i = 1; i < run.result.cycles.size(); ++i) {
      const double f = run.result.cycles[i].lyapunov_negative_fraction;
      if (std::isnan(f)) continue;
      worst_fraction = std::min(worst_fraction, f);
      if (f < tol.lyapunov_fraction) lyap_ok = false;
    }
    results.push_back({"synth.distance_decrease", lyap_ok,
                       detail::describe(worst_fraction, tol.lyapunov_fraction) +
                           " negative-derivative fraction"});
  }

  // Isotropic plant steers straight to the target.
  {
    ControlAffineField plant;
    plant.state_dim = plant.input_dim = 2;
    plant.f = [](const Vec& x) { return Vec(Vec::Zero(x.size())); };
    plant.G = [](const Vec& x) { return Mat(Mat::Identity(x.size(), x.size())); };
    plant.lipschitz_f = plant.lipschitz_G = 0.5;
    const Vec x0 = Vec::Zero(2);
    const LocalData local = LocalData::probe(plant, x0);
    SynthesisConfig cfg;
    cfg.target = Vec(2);
    cfg.target << 0.1, 0.0;
    cfg.horizon = 0.2;
    cfg.cycle.dt = 1e-3;
    cfg.cycle.eps = 0.05;
    cfg.cycle.k = 2.0;
    cfg.cycle.input_dim = 2;
    PlantSimulator sim(plant, x0);
    const SynthesisResult res = synthesize(sim, local, cfg);
    const bool ok = res.termination == Termination::target_radius &&
                    res.final_error <= 2.0 * res.radius;
    results.push_back({"synth.isotropic_plant_reaches", ok,
                       "final error " + std::to_string(res.final_error) + " vs 2r = " +
                           std::to_string(2.0 * res.radius)});

    // With zero drift the plain and finite-time loops make identical
    // decisions; control signals agree on the shared prefix.
    PlantSimulator sim2(plant, x0);
    SynthesisConfig cfg2 = cfg;
    cfg2.variant = Variant::algorithm2;
    const SynthesisResult res2 = synthesize_finite_time(sim2, local, cfg2);
    const std::size_t shared = std::min(res.control.piece_count(), res2.control.piece_count());
    bool same = shared > 0;
    for (std::size_t i = 0; i < shared; ++i)
      if (res.control.piece_value(i) != res2.control.piece_value(i)) same = false;
    results.push_back({"synth.zero_drift_equivalence", same,
                       std::to_string(shared) + " shared control pieces"});
  }
  return results;
}

/// Benchmark constants, the scenario table, and the accuracy ordering.
inline std::vector<CheckResult> verify_casestudy(const VerifyTolerances& tol = {}) {
  std::vector<CheckResult> results;
  const ProxyParams p = detail::quadrotor_proxy();

  {
    const bool b_ok = std::abs(p.gain - 111.11) / 111.11 <= 0.01;
    const bool c_ok = p.decay == 2.0;
    Vec a_ref(2);
    a_ref << -8.73, 13.09;
    bool a_ok = true;
    for (int i = 0; i < 2; ++i)
      if (std::abs(p.drift(i) - a_ref(i)) > 1e-3 * std::abs(a_ref(i))) a_ok = false;
    // the declared bound L_f = 1 is conservative against the exact constant
    const double exact_lf = quadrotor_drift_lipschitz();
    const bool lf_ok = exact_lf <= 1.0;
    results.push_back({"casestudy.constants", b_ok && c_ok && a_ok && lf_ok,
                       "b = " + std::to_string(p.gain) + ", c = " + std::to_string(p.decay) +
                           ", exact drift Lipschitz " + std::to_string(exact_lf)});
  }

  {
    bool ok = true;
    std::string detail_str;
    for (const Scenario& sc : scenarios()) {
      const double raw =
          learning_radius(p, sc.k, sc.dt, 2, RadiusVariant::raw, tol.directions);
      const double sub = learning_radius(p, sc.k, sc.dt, 2, RadiusVariant::drift_subtracted,
                                         tol.directions);
      const double rel_raw = std::abs(raw - sc.expected_radius) / sc.expected_radius;
      const double rel_sub = std::abs(sub - sc.expected_radius) / sc.expected_radius;
      if (rel_raw > tol.radius_relative || rel_sub > tol.radius_relative) ok = false;
      detail_str += std::string(1, sc.id) + ":" + std::to_string(raw) + " ";
    }
    results.push_back({"casestudy.learning_radii", ok, "raw radii " + detail_str});
  }

  {
    // Deviation from the surrogate reference path grows from the tightest to
    // the loosest parameter setting; endpoints stay within 2r on the gated
    // settings.
    std::vector<double> deviations;
    bool contained = true;
    bool pieces_ok = true;
    for (const Scenario& sc : scenarios()) {
      const ScenarioRun run = run_scenario(sc.id, 30.0);
      deviations.push_back(run.max_deviation);
      if ((sc.id == 'A' || sc.id == 'B') &&
          (run.result.trajectory.back_state() - run.target).norm() > 2.0 * run.result.radius)
        contained = false;
      if (run.result.control.piece_count() !=
          3 * static_cast<std::size_t>(run.result.cycles_executed))
        pieces_ok = false;
    }
    bool ordered = true;
    for (std::size_t i = 1; i < deviations.size(); ++i)
      if (!(deviations[i] > deviations[i - 1])) ordered = false;
    std::string detail_str = "deviations";
    for (double d : deviations) detail_str += " " + std::to_string(d);
    results.push_back({"casestudy.accuracy_ordering", ordered, detail_str});
    results.push_back({"casestudy.containment_witness", contained,
                       "A and B endpoints inside the 2r ball of their targets"});
    results.push_back({"casestudy.three_pieces_per_cycle", pieces_ok,
                       "control pieces = 3 x executed cycles"});
  }
  return results;
}

inline std::vector<CheckResult> verify_suite(const std::string& name,
                                             const VerifyTolerances& tol = {}) {
  if (name == "proxy") return verify_proxy(tol);
  if (name == "learner") return verify_learner(tol);
  if (name == "synth") return verify_synth(tol);
  if (name == "casestudy") return verify_casestudy(tol);
  if (name == "all") {
    std::vector<CheckResult> all;
    for (const char* suite : {"proxy", "learner", "synth", "casestudy"}) {
      auto part = verify_suite(suite, tol);
      all.insert(all.end(), part.begin(), part.end());
    }
    return all;
  }
  throw ParameterError("unknown verification suite '" + name + "'");
}

}  // namespace grsreach
