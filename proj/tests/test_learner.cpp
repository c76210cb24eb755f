#include "grsreach/learner.hpp"
#include "grsreach/casestudy.hpp"

#include "helpers.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

using namespace grsreach;
using namespace grsreach::testing;

TEST_CASE("perturbation inputs follow the sign rule") {
  const auto inputs = perturbation_inputs(vec2(0.5, 0.0), 0.1);
  REQUIRE(inputs.size() == 3);
  REQUIRE(inputs[0] == vec2(0.5, 0.0));
  REQUIRE(inputs[1] == vec2(0.4, 0.0));  // pushed toward the interior
  REQUIRE(inputs[2] == vec2(0.5, 0.1));  // zero component takes +eps
}

TEST_CASE("perturbation inputs from the origin") {
  const auto inputs = perturbation_inputs(vec2(0, 0), 0.2);
  REQUIRE(inputs[0] == vec2(0.0, 0.0));
  REQUIRE(inputs[1] == vec2(0.2, 0.0));
  REQUIRE(inputs[2] == vec2(0.0, 0.2));
  for (const Vec& u : inputs) REQUIRE(u.norm() <= 1.0);
}

TEST_CASE("perturbation base must leave room for the amplitude") {
  REQUIRE_THROWS_AS(perturbation_inputs(vec2(0.95, 0.0), 0.1), InadmissibleBaseError);
}

TEST_CASE("perturbation differences span the input space") {
  const auto inputs = perturbation_inputs(vec2(-0.3, 0.4), 0.05);
  Mat diffs(2, 2);
  for (int j = 1; j <= 2; ++j) diffs.col(j - 1) = inputs[static_cast<std::size_t>(j)] - inputs[0];
  REQUIRE(grsreach::detail::svd_with_rank(diffs).rank == 2);
}

TEST_CASE("a cycle on the identity plant advances linearly piece by piece") {
  const auto field = identity_actuation(2);
  CycleConfig cfg;
  cfg.dt = 0.01;
  cfg.eps = 0.1;
  cfg.input_dim = 2;
  const CycleRecord rec = run_cycle(field, vec2(0, 0), 0.0, vec2(0.1, 0.0), cfg);
  REQUIRE(rec.states.size() == 4);  // m + 2 samples
  const Vec step = rec.states[1] - rec.states[0];
  REQUIRE(std::abs(step(0) - 0.001) < 1e-9);
  REQUIRE(std::abs(step(1)) < 1e-9);
}

TEST_CASE("cycle samples land on exact multiples of dt") {
  const auto field = identity_actuation(2);
  CycleConfig cfg;
  cfg.dt = 0.01;
  cfg.eps = 0.1;
  cfg.input_dim = 2;
  Trajectory sink;
  const double t_start = 0.25;
  run_cycle(field, vec2(0, 0), t_start, vec2(0.1, 0.0), cfg, 20, {}, &sink);
  for (int j = 0; j <= 3; ++j) {
    const double expected = t_start + j * cfg.dt;
    bool found = false;
    for (const double t : sink.times)
      if (t == expected) found = true;
    REQUIRE(found);
  }
}

TEST_CASE("quadrotor cycle respects the state-excursion bound") {
  const auto field = build_quadrotor();
  CycleConfig cfg;
  cfg.dt = 1e-4;
  cfg.eps = 0.005;
  cfg.input_dim = 2;
  const CycleRecord rec = run_cycle(field, vec2(0, 0), 0.0, vec2(0.3, -0.2), cfg);
  const ProxyParams p =
      derive_proxy(field.f(vec2(0, 0)), field.G(vec2(0, 0)), 1.0, 1.0);
  const BoundConstants consts = default_bound_constants(
      field.f(vec2(0, 0)), field.G(vec2(0, 0)), 1.0, 1.0, p.domain_radius(), 25.0);
  for (int j = 0; j <= 3; ++j)
    for (int k = 0; k <= 3; ++k) {
      const double lhs = (rec.states[static_cast<std::size_t>(j)] -
                          rec.states[static_cast<std::size_t>(k)])
                             .norm();
      REQUIRE(lhs <= consts.M0 * 3.0 * std::abs(j - k) * cfg.dt + 1e-15);
    }
}

TEST_CASE("velocity estimate with a vertex weight is a first difference") {
  const auto field = identity_actuation(2);
  CycleConfig cfg;
  cfg.dt = 0.01;
  cfg.eps = 0.1;
  cfg.input_dim = 2;
  const CycleRecord rec = run_cycle(field, vec2(0.2, -0.1), 0.0, vec2(0.1, 0.2), cfg);
  Vec lambda = Vec::Zero(3);
  lambda(0) = 1.0;
  const Vec v = velocity_estimate(rec, lambda);
  const Vec expected = (rec.states[1] - rec.states[0]) / cfg.dt;
  REQUIRE((v - expected).norm() < 1e-15);
}

TEST_CASE("velocity estimate is exact for state-independent dynamics") {
  const auto field = identity_actuation(2);
  CycleConfig cfg;
  cfg.dt = 0.01;
  cfg.eps = 0.1;
  cfg.input_dim = 2;
  const CycleRecord rec = run_cycle(field, vec2(0, 0), 0.0, vec2(0.3, 0.1), cfg);
  Vec lambda(3);
  lambda << 0.5, 0.8, -0.3;  // affine weights need not be nonnegative
  const Vec v = velocity_estimate(rec, lambda);
  Vec u_lambda = Vec::Zero(2);
  for (int j = 0; j < 3; ++j) u_lambda += lambda(j) * rec.inputs[static_cast<std::size_t>(j)];
  REQUIRE((v - u_lambda).norm() < 1e-12);
}

TEST_CASE("velocity estimate rejects weights that do not sum to one") {
  const auto field = identity_actuation(2);
  CycleConfig cfg;
  cfg.dt = 0.01;
  cfg.eps = 0.1;
  cfg.input_dim = 2;
  const CycleRecord rec = run_cycle(field, vec2(0, 0), 0.0, vec2(0, 0), cfg);
  Vec lambda(3);
  lambda << 0.5, 0.5, 0.5;
  REQUIRE_THROWS_AS(velocity_estimate(rec, lambda), ParameterError);
}

TEST_CASE("estimation-error bound C") {
  CycleConfig cfg;
  cfg.dt = 0.01;
  cfg.eps = 0.1;
  cfg.input_dim = 2;
  BoundConstants consts;
  consts.M0 = 1.0;
  consts.L_max = 1.0;
  // direct evaluation: 2 * 27 * 0.01 * (4 * 2^{3/2} + 0.1) / 0.1
  const double expected = 2.0 * 27.0 * 0.01 * (4.0 * std::pow(2.0, 1.5) + 0.1) / 0.1;
  REQUIRE(bound_C(cfg, consts) == Catch::Approx(expected).epsilon(1e-12));
  REQUIRE(std::abs(bound_C(cfg, consts) - 61.63) < 0.01);

  CycleConfig zero = cfg;
  zero.dt = 0.0;
  REQUIRE(bound_C(zero, consts) == 0.0);
  CycleConfig doubled = cfg;
  doubled.dt = 2.0 * cfg.dt;
  REQUIRE(bound_C(doubled, consts) == Catch::Approx(2.0 * bound_C(cfg, consts)));
}

TEST_CASE("suboptimality bound mu") {
  CycleConfig cfg;
  cfg.dt = 1e-3;
  cfg.eps = 1.0 - 1e-15;  // eps = 1 limit of the formula
  cfg.input_dim = 2;
  BoundConstants consts;
  consts.M0 = consts.M1 = consts.L = consts.L_max = 1.0;
  const double expected =
      6.0 * 2.0 * 2.0 * 27.0 * (1.0 + 8.0 * std::sqrt(2.0)) * 1e-3 + 3.0 * 1e-3;
  REQUIRE(bound_mu(cfg, consts) == Catch::Approx(expected).epsilon(1e-9));
  REQUIRE(std::abs(bound_mu(cfg, consts) - 7.987) < 0.01);

  cfg.dt = 0.0;
  REQUIRE(bound_mu(cfg, consts) == 0.0);

  // monotone decreasing in eps
  cfg.dt = 1e-3;
  CycleConfig smaller = cfg;
  smaller.eps = 0.2;
  CycleConfig larger = cfg;
  larger.eps = 0.6;
  REQUIRE(bound_mu(smaller, consts) > bound_mu(larger, consts));
}

TEST_CASE("closed-form argmin is steepest descent for identity actuation") {
  const auto field = identity_actuation(2);
  CycleConfig cfg;
  cfg.dt = 1e-3;
  cfg.eps = 0.1;
  cfg.input_dim = 2;
  const CycleRecord rec = run_cycle(field, vec2(0, 0), 0.0, vec2(0, 0), cfg);
  const ArgminResult am = argmin_direction(rec, vec2(1, 0));
  REQUIRE_FALSE(am.degenerate);
  REQUIRE((am.u_star - vec2(-1, 0)).norm() < 1e-9);
  // the weights reconstruct the minimizer
  Vec u_lambda = Vec::Zero(2);
  for (int j = 0; j < 3; ++j)
    u_lambda += am.lambda_star(j) * rec.inputs[static_cast<std::size_t>(j)];
  REQUIRE((u_lambda - am.u_star).norm() < 1e-12);
  REQUIRE(am.lambda_star.sum() == Catch::Approx(1.0));
}

TEST_CASE("argmin value does not exceed any vertex weight") {
  const auto field = build_quadrotor();
  CycleConfig cfg;
  cfg.dt = 1e-4;
  cfg.eps = 0.01;
  cfg.input_dim = 2;
  const CycleRecord rec = run_cycle(field, vec2(0, 0), 0.0, vec2(0.2, 0.4), cfg);
  const Vec g = vec2(-0.3, 1.2);
  const ArgminResult am = argmin_direction(rec, g);
  for (int j = 0; j < 3; ++j) {
    Vec lambda = Vec::Zero(3);
    lambda(j) = 1.0;
    REQUIRE(am.value <= g.dot(velocity_estimate(rec, lambda)) + 1e-12);
  }
}

TEST_CASE("flat objective is flagged degenerate") {
  CycleRecord rec;
  rec.dt = 0.01;
  rec.inputs = perturbation_inputs(vec2(0.1, 0.0), 0.05);
  // all samples equal: every first difference vanishes
  for (int j = 0; j < 4; ++j) rec.states.push_back(vec2(1.0, 2.0));
  const ArgminResult am = argmin_direction(rec, vec2(0, 1));
  REQUIRE(am.degenerate);
  REQUIRE(am.u_star == rec.inputs[0]);
}

TEST_CASE("argmin requires a nonzero gradient") {
  const auto field = identity_actuation(2);
  CycleConfig cfg;
  cfg.dt = 0.01;
  cfg.eps = 0.1;
  cfg.input_dim = 2;
  const CycleRecord rec = run_cycle(field, vec2(0, 0), 0.0, vec2(0, 0), cfg);
  REQUIRE_THROWS_AS(argmin_direction(rec, vec2(0, 0)), ParameterError);
}

TEST_CASE("cycle configuration validation and the epsilon advisory") {
  CycleConfig cfg;
  cfg.dt = 1e-4;
  cfg.eps = 0.005;
  cfg.k = 5.0;
  cfg.input_dim = 2;
  REQUIRE_NOTHROW(cfg.validate());
  REQUIRE(cfg.cycle_length() == Catch::Approx(3e-4));
  REQUIRE(cfg.epsilon_above_init_threshold());  // 0.005 > 100 * (1e-4)^2

  CycleConfig coarse = cfg;
  coarse.dt = 0.05;
  coarse.eps = 0.1;
  REQUIRE_FALSE(coarse.epsilon_above_init_threshold());  // 0.1 < 100 * 0.0025

  CycleConfig bad = cfg;
  bad.eps = 1.5;
  REQUIRE_THROWS_AS(bad.validate(), ParameterError);
  bad = cfg;
  bad.k = 0.5;
  REQUIRE_THROWS_AS(bad.validate(), ParameterError);
}
