#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <random>

#include "rlr/solver.hpp"

using namespace rlr;

namespace {

ProblemSpec l2_spec(double delta, double lambda, double kappa = 1.0) {
  ProblemSpec s;
  s.kappa = kappa;
  s.delta = delta;
  s.lambda = lambda;
  s.regularizer = {Regularizer::l2sq};
  s.prior = PriorSpec::make_gaussian(kappa);
  return s;
}

ProblemSpec l1_spec(double delta, double lambda, double sparsity, double kappa = 1.0) {
  ProblemSpec s;
  s.kappa = kappa;
  s.delta = delta;
  s.lambda = lambda;
  s.regularizer = {Regularizer::l1};
  s.prior = PriorSpec::make_sparse(kappa, sparsity);
  return s;
}

ProblemSpec ml_spec(double delta, double kappa = 1.0) {
  ProblemSpec s;
  s.kappa = kappa;
  s.delta = delta;
  s.lambda = 0.0;
  s.regularizer = {Regularizer::none};
  s.prior = PriorSpec::make_gaussian(kappa);
  return s;
}

}  // namespace

TEST_CASE("system_map is deterministic") {
  const ProblemSpec spec = l1_spec(4.0, 0.8, 0.25);
  const QuadratureRule& rule = gauss_hermite(80);
  const FixedPoint v{0.4, 1.2, 0.9, 0.7, 2.0, 1.1};
  const auto a = system_map(v, spec, rule);
  const auto b = system_map(v, spec, rule);
  CHECK(a.value.alpha == b.value.alpha);
  CHECK(a.value.sigma == b.value.sigma);
  CHECK(a.value.gamma == b.value.gamma);
  CHECK(a.value.theta == b.value.theta);
  CHECK(a.value.tau == b.value.tau);
  CHECK(a.value.r == b.value.r);
}

TEST_CASE("l2sq map output satisfies the closed-form relations at any state") {
  // theta = alpha/(gamma delta), tau = delta gamma/(sigma(1-lambda delta gamma)),
  // r = sigma/(gamma sqrt(delta)), rearranged against the map outputs.
  const ProblemSpec spec = l2_spec(4.0, 0.5);
  const QuadratureRule& rule = gauss_hermite(80);
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(0.1, 3.0);
  for (int i = 0; i < 10; ++i) {
    const FixedPoint v{u(rng), u(rng), u(rng), u(rng), u(rng), u(rng)};
    const FixedPoint out = system_map(v, spec, rule).value;
    CHECK(std::abs(out.alpha - v.theta * out.gamma * spec.delta) < 1e-8);
    CHECK(std::abs(out.sigma - v.r * out.gamma * std::sqrt(spec.delta)) < 1e-8);
    const double denom = 1.0 - spec.lambda * spec.delta * out.gamma;
    CHECK(std::abs(v.tau - spec.delta * out.gamma / (v.sigma * denom)) < 1e-8 * v.tau);
  }
}

TEST_CASE("sparse l1 closed forms equal direct quadrature at random states") {
  const ProblemSpec spec = l1_spec(4.0, 0.8, 0.25);
  const QuadratureRule& rule = gauss_hermite(80);
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> u(0.1, 3.0);
  for (int i = 0; i < 20; ++i) {
    const FixedPoint v{u(rng), u(rng), u(rng), u(rng), u(rng), u(rng)};
    const FixedPoint q = system_map(v, spec, rule, false).value;
    const FixedPoint c = system_map(v, spec, rule, true).value;
    CHECK(std::abs(q.alpha - c.alpha) < 1e-8);
    CHECK(std::abs(q.gamma - c.gamma) < 1e-8);
    CHECK(std::abs(q.sigma - c.sigma) < 1e-8);
  }
}

TEST_CASE("solve_fixed_point converges on an l2sq cell") {
  const SolveResult sol = solve_fixed_point(l2_spec(4.0, 0.5));
  CHECK(sol.converged);
  CHECK(sol.residual < 1e-8);
  // closed-form relations among the six coordinates at the solution
  const FixedPoint& v = sol.point;
  CHECK(std::abs(v.theta - v.alpha / (v.gamma * 4.0)) < 1e-6);
  CHECK(std::abs(v.r - v.sigma / (v.gamma * 2.0)) < 1e-6);
  CHECK(std::abs(v.tau - 4.0 * v.gamma / (v.sigma * (1.0 - 0.5 * 4.0 * v.gamma))) < 1e-4);
}

TEST_CASE("l1 solution identical through quadrature and closed-form routes") {
  SolverKnobs knobs;
  const ProblemSpec spec = l1_spec(4.0, 0.8, 0.25);
  const SolveResult a = solve_fixed_point(spec, knobs);
  knobs.closed_form_ftilde = true;
  const SolveResult b = solve_fixed_point(spec, knobs);
  CHECK(a.converged);
  CHECK(b.converged);
  CHECK(std::abs(a.point.alpha - b.point.alpha) < 1e-6);
  CHECK(std::abs(a.point.sigma - b.point.sigma) < 1e-6);
  CHECK(std::abs(a.point.gamma - b.point.gamma) < 1e-6);
  CHECK(std::abs(a.point.theta - b.point.theta) < 1e-6);
  CHECK(std::abs(a.point.tau - b.point.tau) < 1e-6);
  CHECK(std::abs(a.point.r - b.point.r) < 1e-6);
}

TEST_CASE("full and reduced solvers agree for l2sq") {
  for (double delta : {2.0, 8.0}) {
    for (double lambda : {0.1, 1.0}) {
      const ProblemSpec spec = l2_spec(delta, lambda);
      const SolveResult full = solve_fixed_point(spec);
      const SolveResult red = solve_l2_reduced(spec);
      CHECK(full.converged);
      CHECK(red.converged);
      CHECK(std::abs(full.point.alpha - red.point.alpha) < 1e-6);
      CHECK(std::abs(full.point.sigma - red.point.sigma) < 1e-6);
      CHECK(std::abs(full.point.gamma - red.point.gamma) < 1e-6);
      CHECK(std::abs(full.point.theta - red.point.theta) < 1e-6);
      CHECK(std::abs(full.point.tau - red.point.tau) < 1e-6);
      CHECK(std::abs(full.point.r - red.point.r) < 1e-6);
    }
  }
}

TEST_CASE("reduced system satisfies its defining residual") {
  // line 3 of the reduction: 1 - 1/delta + lambda*gamma equals the
  // contraction expectation at the solution.
  const ProblemSpec spec = l2_spec(4.0, 0.5);
  const SolveResult red = solve_l2_reduced(spec);
  const QuadratureRule& rule = gauss_hermite(80);
  const FixedPoint& v = red.point;
  const double e6 = expect_z1z2(
      [&](double z1, double z2) {
        const double w = spec.kappa * v.alpha * z1 + v.sigma * z2;
        const double p = prox_rho(w, v.gamma);
        return 2.0 * rho_prime(-spec.kappa * z1) / (1.0 + v.gamma * rho_second(p));
      },
      rule);
  CHECK(std::abs(1.0 - 1.0 / spec.delta + spec.lambda * v.gamma - e6) < 1e-8);
}

TEST_CASE("maximum-likelihood path at lambda zero") {
  const SolveResult sol = solve_fixed_point(ml_spec(8.0));
  CHECK(sol.converged);
  CHECK(sol.residual < 1e-8);
  CHECK(sol.point.alpha > 1.0);  // ML inflation above one
  // reduced route returns the same thing by construction
  const SolveResult red = solve_l2_reduced(ml_spec(8.0));
  CHECK(std::abs(sol.point.alpha - red.point.alpha) < 1e-8);
  CHECK(std::abs(sol.point.sigma - red.point.sigma) < 1e-8);
}

TEST_CASE("lambda zero with l1 is routed as unsupported") {
  ProblemSpec spec = l1_spec(4.0, 0.0, 0.25);
  CHECK_THROWS_AS(solve_fixed_point(spec), std::invalid_argument);
}

TEST_CASE("correlation is nonincreasing in lambda for l2sq") {
  for (double delta : {2.0, 4.0}) {
    double prev = 2.0;
    for (double lambda : {0.1, 0.3, 0.6, 1.0, 1.5}) {
      const SolveResult sol = solve_fixed_point(l2_spec(delta, lambda));
      REQUIRE(sol.converged);
      CHECK(sol.point.alpha < prev);
      prev = sol.point.alpha;
    }
  }
}

TEST_CASE("gamma_map shapes") {
  FixedPoint v{0.5, 1.1, 0.8, 0.21, 12.0, 0.45};

  ProblemSpec l1 = l1_spec(4.0, 5.0, 0.25);
  // huge lambda*c threshold kills a small argument
  CHECK(gamma_map(0.01, 0.01, v, l1) == 0.0);

  ProblemSpec l2 = l2_spec(4.0, 0.5);
  const double c = v.sigma * v.tau;
  auto lin = [&](double b, double z) {
    return c * (v.theta * b + v.r / 2.0 * z) / (1.0 + 0.5 * c);
  };
  CHECK(gamma_map(0.7, -0.3, v, l2) == doctest::Approx(lin(0.7, -0.3)).epsilon(1e-12));
  CHECK(gamma_map(1.0, 1.0, v, l2) + gamma_map(-1.0, -1.0, v, l2) ==
        doctest::Approx(0.0));

  ProblemSpec none = ml_spec(4.0);
  CHECK(gamma_map(0.7, -0.3, v, none) ==
        doctest::Approx(c * (v.theta * 0.7 - v.r / 2.0 * 0.3)).epsilon(1e-12));
}

TEST_CASE("predict_functional recovers the defining moments") {
  const QuadratureRule& rule = gauss_hermite(80);
  const std::vector<ProblemSpec> specs = {l2_spec(4.0, 0.5), l1_spec(4.0, 0.8, 0.25),
                                          ml_spec(8.0)};
  for (const ProblemSpec& spec : specs) {
    const SolveResult sol = solve_fixed_point(spec);
    REQUIRE(sol.converged);
    const FixedPoint& v = sol.point;
    const double kappa2 = spec.kappa * spec.kappa;

    const double one = predict_functional([](double, double) { return 1.0; }, v, spec, rule);
    CHECK(one == doctest::Approx(1.0).epsilon(1e-10));

    const double corr =
        predict_functional([&](double u, double b) { return u * b / kappa2; }, v, spec, rule);
    CHECK(std::abs(corr - v.alpha) < 1e-8);

    const double second =
        predict_functional([](double u, double) { return u * u; }, v, spec, rule);
    CHECK(std::abs(second - (kappa2 * v.alpha * v.alpha + v.sigma * v.sigma)) < 1e-8);

    const double centered = predict_functional(
        [&](double u, double b) { return (u - v.alpha * b) * (u - v.alpha * b); }, v, spec,
        rule);
    CHECK(std::abs(centered - v.sigma * v.sigma) < 1e-8);
  }
}

TEST_CASE("support recovery predictions") {
  const ProblemSpec spec = l1_spec(4.0, 0.8, 0.25);
  const SolveResult sol = solve_fixed_point(spec);
  REQUIRE(sol.converged);

  const SupportRecovery sr = predict_support_recovery(sol.point, spec);
  CHECK(sr.e1 > 0.0);
  CHECK(sr.e1 < 1.0);
  CHECK(sr.e2 > 0.0);
  CHECK(sr.e2 < 1.0);
  CHECK(sr.t_offsupport > sr.t_onsupport);  // off-support scale is smaller

  // limits: thresholds scale linearly in lambda around a fixed state
  FixedPoint v = sol.point;
  ProblemSpec tiny = spec;
  tiny.lambda = 1e-12;
  const SupportRecovery low = predict_support_recovery(v, tiny);
  CHECK(low.e1 == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(low.e2 == doctest::Approx(0.0).epsilon(1e-6));

  ProblemSpec big = spec;
  big.lambda = 8.0 * std::max(v.r / 2.0, std::sqrt(v.r * v.r / 4.0 + v.theta * v.theta * 4.0));
  const SupportRecovery high = predict_support_recovery(v, big);
  CHECK(high.e1 < 1e-14);
  CHECK(high.e2 > 1.0 - 1e-13);

  CHECK_THROWS_AS(predict_support_recovery(v, l2_spec(4.0, 0.5)), std::invalid_argument);
}

TEST_CASE("e1 decreases with lambda along solved points") {
  double prev = 2.0;
  for (double lambda : {0.3, 0.6, 1.0}) {
    const ProblemSpec spec = l1_spec(4.0, lambda, 0.25);
    const SolveResult sol = solve_fixed_point(spec);
    REQUIRE(sol.converged);
    const SupportRecovery sr = predict_support_recovery(sol.point, spec);
    CHECK(sr.e1 < prev);
    prev = sr.e1;
  }
}

TEST_CASE("theory_report fields are consistent") {
  const TheoryReport rep = theory_report(l1_spec(4.0, 0.8, 0.25));
  CHECK(rep.converged);
  CHECK(rep.correlation == rep.fixed_point.alpha);
  CHECK(rep.variance == doctest::Approx(rep.fixed_point.sigma * rep.fixed_point.sigma));
  CHECK(rep.mse_debiased ==
        doctest::Approx(rep.variance / (rep.correlation * rep.correlation)));
  // mse_raw = sigma^2 + kappa^2 (1-alpha)^2 at the fixed point
  CHECK(std::abs(rep.mse_raw -
                 (rep.variance + (1.0 - rep.correlation) * (1.0 - rep.correlation))) < 1e-7);
  REQUIRE(rep.support.has_value());

  const TheoryReport l2rep = theory_report(l2_spec(4.0, 0.5));
  CHECK(!l2rep.support.has_value());
}

TEST_CASE("spec validation") {
  ProblemSpec bad = l2_spec(4.0, 0.5);
  bad.kappa = -1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  ProblemSpec none_lambda = ml_spec(4.0);
  none_lambda.lambda = 0.5;
  CHECK_THROWS_AS(none_lambda.validate(), std::invalid_argument);

  ProblemSpec mismatch = l2_spec(4.0, 0.5);
  mismatch.prior.kappa = 2.0;
  CHECK_THROWS_AS(mismatch.validate(), std::invalid_argument);
}
