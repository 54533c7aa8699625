#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include <ctmrisk/ctmrisk.hpp>

#include "testutil.hpp"

using namespace ctmrisk;
using testutil::Rng;

namespace {

MarkovModel<double> symmetric_two_state() {
  Eigen::Matrix2d g;
  g << -1.0, 1.0, 1.0, -1.0;
  Eigen::Vector2d f(0.0, 1.0);
  return {StateSpace::numbered(2), GeneratorSchedule<double>(g, 1.0),
          CostSpec<double>::terminal_only(f)};
}

MarkovModel<double> two_piece_model() {
  Eigen::Matrix3d g1, g2;
  g1 << -1.2, 0.8, 0.4, 0.3, -0.5, 0.2, 0.0, 0.6, -0.6;
  g2 << -0.4, 0.1, 0.3, 0.9, -1.1, 0.2, 0.5, 0.5, -1.0;
  GeneratorSchedule<double> gen({0.4, 1.0}, {g1, g2});
  Eigen::Vector3d f(1.0, -0.5, 0.25);
  return {StateSpace::numbered(3), std::move(gen), CostSpec<double>::terminal_only(f)};
}

}  // namespace

TEST_CASE("exact one-step kernels make the risk-neutral recursion node-exact") {
  // Without running cost the expectation recursion composes exact kernels,
  // so every node equals the kernel value regardless of the mesh.
  const auto model = symmetric_two_state();
  const auto spec = RiskMappingSpec<double>::expectation(2);
  for (Index steps : {1, 7}) {
    const auto dp = dp_recursion(model, spec, steps);
    for (Index i = 0; i <= steps; ++i) {
      const Eigen::VectorXd ref = kolmogorov_reference(model, dp.node(i));
      INFO("steps " << steps << " node " << i);
      REQUIRE((dp.values.row(i).transpose() - ref).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
}

TEST_CASE("piece-straddling steps fall back to the exact product kernel") {
  const auto model = two_piece_model();
  const auto spec = RiskMappingSpec<double>::expectation(3);
  const Eigen::VectorXd ref = kolmogorov_reference(model, 0.0);
  // N = 3 puts the breakpoint 0.4 inside a step; N = 10 puts it on a node.
  for (Index steps : {3, 10}) {
    const auto dp = dp_recursion(model, spec, steps);
    INFO("steps " << steps);
    REQUIRE((dp.values.row(0).transpose() - ref).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("dp interpolation is linear inside the horizon and rejects times outside") {
  const auto model = symmetric_two_state();
  const auto dp = dp_recursion(model, RiskMappingSpec<double>::avar(2, 0.5), 8);
  const double t = 0.3;  // inside segment [0.25, 0.375]
  const Eigen::VectorXd v = dp.at(t);
  const double w = (t - dp.node(2)) / (dp.node(3) - dp.node(2));
  for (Index x = 0; x < 2; ++x)
    REQUIRE(v(x) == Catch::Approx((1.0 - w) * dp.values(2, x) + w * dp.values(3, x)).margin(1e-14));
  REQUIRE(dp.at(0.0) == interpolate(dp, 0.0));
  REQUIRE_THROWS_AS(dp.at(-0.1), std::domain_error);
  REQUIRE_THROWS_AS(dp.at(1.1), std::domain_error);
}

TEST_CASE("dp iterates approach the backward solution at first order") {
  const std::vector<Index> ladder{10, 20, 40, 80, 160};
  SolverConfig<double> fine;
  fine.steps = 2000;

  struct Case {
    const char* name;
    MarkovModel<double> model;
    RiskMappingSpec<double> spec;
    double final_cap;
    // One-step composition error makes the recursion first-order accurate
    // in general; the symmetric two-state chain superconverges at order two
    // through cancellation in the exact one-step kernels.
    double expected_order;
  };
  Rng rng(81);
  std::vector<Case> cases;
  cases.push_back(
      {"two-state avar", symmetric_two_state(), RiskMappingSpec<double>::avar(2, 0.5), 1e-3, 2.0});
  cases.push_back({"running-cost semideviation", testutil::random_model(rng, 3, 1.0, true, 1.0),
                   RiskMappingSpec<double>::semideviation(3, 0.6, 1.0), 1e-2, 1.0});
  cases.push_back({"two-piece avar", two_piece_model(), RiskMappingSpec<double>::avar(3, 0.4), 1e-2, 1.0});

  for (const auto& c : cases) {
    const auto reference = solve_ode(c.model, c.spec, fine);
    const auto report = convergence_study(c.model, c.spec, ladder, reference);
    INFO(c.name);
    CAPTURE(report.sup_errors, report.orders);
    REQUIRE(report.sup_errors.size() == ladder.size());
    for (std::size_t k = 0; k + 1 < report.sup_errors.size(); ++k)
      REQUIRE(report.sup_errors[k + 1] < report.sup_errors[k]);
    REQUIRE(report.sup_errors.back() <= c.final_cap);
    REQUIRE(report.orders.back() == Catch::Approx(c.expected_order).margin(0.35));
  }
}

TEST_CASE("the study rejects bad ladders and coarse references") {
  const auto model = symmetric_two_state();
  const auto spec = RiskMappingSpec<double>::avar(2, 0.5);
  SolverConfig<double> config;
  config.steps = 400;
  const auto reference = solve_ode(model, spec, config);
  REQUIRE_THROWS_AS(convergence_study(model, spec, {}, reference), ConfigError);
  REQUIRE_THROWS_AS(convergence_study(model, spec, {10, 10}, reference), ConfigError);
  REQUIRE_THROWS_AS(convergence_study(model, spec, {0, 10}, reference), ConfigError);
  // 400 segments cannot referee a 160-step mesh at the required 8x margin.
  REQUIRE_THROWS_AS(convergence_study(model, spec, {10, 160}, reference), ConfigError);
  REQUIRE_THROWS_AS(dp_recursion(model, spec, 0), ConfigError);
  REQUIRE_THROWS_AS(dp_recursion(model, RiskMappingSpec<double>::avar(3, 0.5), 4),
                    std::invalid_argument);
}

TEST_CASE("semideviation above order one runs through the dp path") {
  Rng rng(82);
  const auto model = testutil::random_model(rng, 3, 1.0, true, 1.0);
  const auto spec = RiskMappingSpec<double>::semideviation(3, 0.7, 2.0);
  const auto dp = dp_recursion(model, spec, 64);
  REQUIRE(dp.values.allFinite());
  REQUIRE(dp.values.cwiseAbs().maxCoeff() <= value_bound(model) + 1e-9);

  // Translation equivariance survives the recursion exactly.
  const double shift = 0.75;
  MarkovModel<double> shifted{model.states, model.generator,
                              CostSpec<double>(model.cost.times(), model.cost.values_grid(),
                                               model.cost.terminal().array() + shift)};
  const auto moved = dp_recursion(shifted, spec, 64);
  REQUIRE(((moved.values - dp.values).array() - shift).abs().maxCoeff() <= 1e-10);

  // And the risk-averse iterates dominate the risk-neutral ones.
  const auto neutral = dp_recursion(model, RiskMappingSpec<double>::expectation(3), 64);
  REQUIRE(((dp.values - neutral.values).array() >= -1e-10).all());

  // Above order one the per-step risk adjustment scales like sqrt(step), so
  // refining the mesh keeps adding risk: the values rise with N instead of
  // settling, staying below the a priori bound. This mesh dependence is
  // intrinsic; the recursion is a fixed-mesh evaluation here, not an
  // approximation of a continuous-time limit.
  const auto coarse = dp_recursion(model, spec, 32);
  const auto fine = dp_recursion(model, spec, 128);
  REQUIRE(((dp.values.row(0) - coarse.values.row(0)).array() > 0).all());
  REQUIRE(((fine.values.row(0) - dp.values.row(0)).array() > 0).all());
  REQUIRE(fine.values.cwiseAbs().maxCoeff() <= value_bound(model) + 1e-9);
}
