#include <catch2/catch_amalgamated.hpp>

#include <ctmrisk/ctmrisk.hpp>

#include <cmath>

#include "testutil.hpp"

using namespace ctmrisk;

namespace {

const std::vector<double> default_ladder{1e-2, 1e-3, 1e-4, 1e-5};

}  // namespace

TEST_CASE("closed-form support values on the two-state row") {
  // Row of the symmetric generator at state 0, ramp values.
  const Eigen::Vector2d k(-1.0, 1.0);
  const Eigen::Vector2d v(0.0, 1.0);

  REQUIRE(support_expectation(k, v) == Catch::Approx(1.0).margin(1e-15));

  const auto avar = RiskMappingSpec<double>::avar(2, 0.5);
  REQUIRE(support_avar(avar, 0, k, v) == Catch::Approx(2.0).margin(1e-14));
  REQUIRE(support_avar(avar, 0, k, Eigen::Vector2d(0.7, 0.7)) == Catch::Approx(0.0).margin(1e-14));

  const auto semi = RiskMappingSpec<double>::semideviation(2, 0.5);
  REQUIRE(support_semideviation(semi, 0, k, v) == Catch::Approx(1.5).margin(1e-14));
  const auto neutral = RiskMappingSpec<double>::semideviation(2, 0.0);
  REQUIRE(support_semideviation(neutral, 0, k, v) == Catch::Approx(support_expectation(k, v)).margin(1e-14));
  REQUIRE(support_semideviation(semi, 0, k, Eigen::Vector2d(0.7, 0.7)) == Catch::Approx(0.0).margin(1e-14));
}

TEST_CASE("support dispatch refuses families without a closed form") {
  const auto p2 = RiskMappingSpec<double>::semideviation(2, 0.5, 2.0);
  const Eigen::Vector2d k(-1.0, 1.0), v(0.0, 1.0);
  REQUIRE_THROWS_AS(support_function(p2, 0, k, v), ConfigError);
  REQUIRE_THROWS_AS(support_bruteforce(p2, 0, k, v), ConfigError);
  REQUIRE_THROWS_AS(semi_derivative_fd_check(p2, 0, k, v, default_ladder), ConfigError);
}

TEST_CASE("closed forms agree with direction-set vertex enumeration") {
  Rng rng(51);
  for (int trial = 0; trial < 300; ++trial) {
    const Index n = 2 + static_cast<Index>(testutil::unif(rng) * 4);
    const Index x = static_cast<Index>(testutil::unif(rng) * static_cast<double>(n)) % n;
    const Eigen::VectorXd k = testutil::random_tangent_row(rng, n, x, testutil::unif(rng, 0.5, 3.0));
    const Eigen::VectorXd v = testutil::random_vector(rng, n);

    const auto exp_spec = RiskMappingSpec<double>::expectation(n);
    const auto avar_spec = RiskMappingSpec<double>::avar(n, testutil::unif(rng, 0.1, 0.95));
    const auto semi_spec = RiskMappingSpec<double>::semideviation(n, testutil::unif(rng, 0.0, 1.0));
    for (const auto& spec : {exp_spec, avar_spec, semi_spec}) {
      const double closed = support_function(spec, x, k, v);
      const double brute = support_bruteforce(spec, x, k, v);
      INFO(risk_kind_name(spec.kind()));
      REQUIRE(std::abs(closed - brute) <= 1e-10);
    }
  }
}

TEST_CASE("support functions vanish on constants and scale with v") {
  Rng rng(52);
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = 2 + static_cast<Index>(testutil::unif(rng) * 4);
    const Index x = static_cast<Index>(testutil::unif(rng) * static_cast<double>(n)) % n;
    const Eigen::VectorXd k = testutil::random_tangent_row(rng, n, x, 2.0);
    const Eigen::VectorXd v = testutil::random_vector(rng, n);
    const double shift = testutil::unif(rng, -3.0, 3.0);
    const double lambda = testutil::unif(rng, 0.1, 4.0);

    const auto avar_spec = RiskMappingSpec<double>::avar(n, 0.4);
    const auto semi_spec = RiskMappingSpec<double>::semideviation(n, 0.7);
    for (const auto& spec : {avar_spec, semi_spec}) {
      const double s = support_function(spec, x, k, v);
      const Eigen::VectorXd shifted = v.array() + shift;
      REQUIRE(support_function(spec, x, k, shifted) == Catch::Approx(s).margin(1e-11));
      REQUIRE(support_function(spec, x, k, Eigen::VectorXd(lambda * v)) ==
              Catch::Approx(lambda * s).margin(1e-11));
      // Risk aversion dominates the plain drift.
      REQUIRE(s >= support_expectation(k, v) - 1e-12);
    }
  }
}

TEST_CASE("worst-case mapping takes the largest reachable value") {
  const Eigen::Vector3d m(0.5, 0.0, 0.5);
  const Eigen::Vector3d v(1.0, 7.0, 2.0);
  REQUIRE(worst_case_sigma<double>(m, v) == 2.0);  // state 1 carries no mass
  REQUIRE_THROWS_AS(worst_case_sigma<double>(Eigen::Vector3d::Zero(), v), std::invalid_argument);
}

TEST_CASE("avar difference quotients are exact along the ladder") {
  const auto spec = RiskMappingSpec<double>::avar(2, 0.5);
  const Eigen::Vector2d k(-1.0, 1.0), v(0.0, 1.0);
  const auto report = semi_derivative_fd_check(spec, 0, k, v, default_ladder);
  REQUIRE(report.converged);
  REQUIRE(report.rows.size() == 4);
  for (const auto& row : report.rows) {
    REQUIRE(row.target == Catch::Approx(2.0).margin(1e-14));
    REQUIRE(row.abs_error <= 1e-10);
  }
}

TEST_CASE("difference quotients converge for closed-form families") {
  // Unit-scale instances: the quotient error of the order-1 semideviation is
  // bounded by 2 kappa ||K||^2 spread(v) eps, so the 1e-4 criterion at
  // eps = 1e-5 presumes rates and values of order one.
  Rng rng(53);
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = 2 + static_cast<Index>(testutil::unif(rng) * 3);
    const Index x = static_cast<Index>(testutil::unif(rng) * static_cast<double>(n)) % n;
    const Eigen::VectorXd k = testutil::random_tangent_row(rng, n, x, testutil::unif(rng, 0.2, 0.5));
    const Eigen::VectorXd v = testutil::random_vector(rng, n, -0.5, 0.5);
    const auto avar_spec = RiskMappingSpec<double>::avar(n, testutil::unif(rng, 0.2, 0.9));
    const auto semi_spec = RiskMappingSpec<double>::semideviation(n, testutil::unif(rng, 0.0, 1.0));
    for (const auto& spec : {avar_spec, semi_spec}) {
      const auto report = semi_derivative_fd_check(spec, x, k, v, default_ladder);
      INFO(risk_kind_name(spec.kind()) << " trial " << trial);
      CAPTURE(report.rows.back().abs_error);
      REQUIRE(report.converged);
    }
  }
}

TEST_CASE("higher-order semideviation quotients diverge like one over sqrt epsilon") {
  // At m = delta_x + eps K the p = 2 deviation term is
  // sqrt(eps * sum_y k(y) ((v(y) - v(x))_+)^2) + o(sqrt(eps)), so the
  // quotient blows up and no finite semi-derivative exists. This is why
  // the support function has no closed form above p = 1.
  Rng rng(54);
  const Index n = 4;
  const Index x = 1;
  const Eigen::VectorXd k = testutil::random_tangent_row(rng, n, x, 0.4, 0.0);
  const Eigen::VectorXd v = testutil::random_vector(rng, n, -0.5, 0.5);
  const double kappa = 0.6;
  const auto spec = RiskMappingSpec<double>::semideviation(n, kappa, 2.0);
  double drift = 0.0;
  for (Index y = 0; y < n; ++y)
    if (y != x) drift += k(y) * (v(y) - v(x));
  const auto report = semi_derivative_fd_check(spec, x, k, v, default_ladder, drift);
  REQUIRE_FALSE(report.converged);
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    const auto& row = report.rows[i];
    // Exact rearrangement of sigma at the perturbed measure.
    double dev_sq = row.epsilon * (1.0 + row.epsilon * k(x)) *
                    std::pow(std::max(-drift, 0.0), 2);
    for (Index y = 0; y < n; ++y)
      if (y != x)
        dev_sq += k(y) * std::pow(std::max(v(y) - v(x) - row.epsilon * drift, 0.0), 2);
    const double predicted = drift + kappa * std::sqrt(dev_sq / row.epsilon);
    REQUIRE(row.quotient == Catch::Approx(predicted).margin(1e-10));
    if (i > 0) REQUIRE(row.abs_error > report.rows[i - 1].abs_error);
  }
}

TEST_CASE("worst-case quotients diverge like one over epsilon") {
  const Eigen::Vector3d k(-1.0, 1.0, 0.0);
  const Eigen::Vector3d v(0.0, 1.0, -1.0);
  const auto report = worst_case_fd_check(0, k, v, default_ladder);
  REQUIRE_FALSE(report.converged);
  for (std::size_t i = 0; i + 1 < report.rows.size(); ++i) {
    // q(eps) = (max reachable v - v(x)) / eps exactly.
    REQUIRE(report.rows[i].quotient == Catch::Approx(1.0 / report.rows[i].epsilon).margin(1e-9));
    REQUIRE(report.rows[i + 1].abs_error > report.rows[i].abs_error);
  }
}

TEST_CASE("fd steps outside the admissible range are rejected") {
  const auto spec = RiskMappingSpec<double>::avar(2, 0.5);
  const Eigen::Vector2d k(-4.0, 4.0), v(0.0, 1.0);
  REQUIRE_THROWS_AS(semi_derivative_fd_check(spec, 0, k, v, {0.5}), std::domain_error);
  REQUIRE_THROWS_AS(semi_derivative_fd_check(spec, 0, k, v, {-1e-3}), std::domain_error);
  REQUIRE_NOTHROW(semi_derivative_fd_check(spec, 0, k, v, {0.25}));
}
