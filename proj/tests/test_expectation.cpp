#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <random>

#include "rlr/expectation.hpp"
#include "rlr/prox.hpp"
#include "rlr/solver.hpp"

using namespace rlr;

TEST_CASE("prior moments") {
  const QuadratureRule& r = gauss_hermite(80);
  const PriorSpec g = PriorSpec::make_gaussian(1.0);
  const PriorSpec sp = PriorSpec::make_sparse(1.0, 0.25);

  CHECK(expect_prior_z([](double b, double) { return b * b; }, g, r) ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(expect_prior_z([](double b, double) { return b * b; }, sp, r) ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(expect_prior_z([](double b, double z) { return b * z; }, g, r)) < 1e-14);
  CHECK(expect_prior_z([](double, double z) { return z * z; }, sp, r) ==
        doctest::Approx(1.0).epsilon(1e-12));

  const PriorSpec k2 = PriorSpec::make_gaussian(2.0);
  CHECK(expect_prior_z([](double b, double) { return b * b; }, k2, r) ==
        doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("tensor normal moments") {
  const QuadratureRule& r = gauss_hermite(80);
  CHECK(expect_z1z2([](double z1, double) { return rho_prime(-z1); }, r) ==
        doctest::Approx(0.5).epsilon(1e-12));
  CHECK(std::abs(expect_z1z2([](double z1, double z2) { return z1 * z2; }, r)) < 1e-14);
  CHECK(expect_z1z2([](double, double z2) { return z2 * z2; }, r) ==
        doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("piecewise integration handles kinks at machine precision") {
  // E[(|aZ|-T)+^2] style moments have exact Q-function values; plain
  // Gauss-Hermite misses them by ~1e-5, the kink-split panels do not.
  const double a = 0.7, T = 0.9;
  auto eta = [&](double x) {
    const double m = std::abs(x) - T;
    return m > 0 ? std::copysign(m, x) : 0.0;
  };
  const double t = T / a;
  const double exact = 2.0 * ((a * a + T * T) * q_function(t) - a * T * normal_pdf(t));
  const double kinks[] = {-t, t};
  const double got =
      expect_z_piecewise([&](double z) { const double e = eta(a * z); return e * e; }, kinks);
  CHECK(std::abs(got - exact) < 1e-13);

  // plain smooth path on a smooth integrand agrees with the piecewise one
  const QuadratureRule& r = gauss_hermite(80);
  const double smooth_gh = expect_z([](double z) { return std::cos(z); }, r);
  const double smooth_pw = expect_z_piecewise([](double z) { return std::cos(z); }, {});
  CHECK(std::abs(smooth_gh - smooth_pw) < 1e-12);
  CHECK(smooth_gh == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
}

TEST_CASE("sparse prior converges to gaussian as s -> 1") {
  const QuadratureRule& r = gauss_hermite(80);
  auto g = [](double b, double z) { return prox_l1(0.8 * b + 0.3 * z, 0.5); };
  const double gaussian =
      expect_prior_z(g, PriorSpec::make_gaussian(1.0), r);
  const double s_one = expect_prior_z(g, PriorSpec::make_sparse(1.0, 1.0), r);
  CHECK(std::abs(gaussian - s_one) < 1e-13);
  const double s_near =
      expect_prior_z(g, PriorSpec::make_sparse(1.0, 0.999), r);
  CHECK(std::abs(gaussian - s_near) < 1e-3);
}

TEST_CASE("doubling the order does not move the system map") {
  // convergence gate for the default order, at representative states
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.1, 3.0);
  ProblemSpec l2;
  l2.kappa = 1.0; l2.delta = 3.0; l2.lambda = 0.4;
  l2.regularizer = {Regularizer::l2sq};
  l2.prior = PriorSpec::make_gaussian(1.0);
  ProblemSpec l1;
  l1.kappa = 1.0; l1.delta = 4.0; l1.lambda = 0.8;
  l1.regularizer = {Regularizer::l1};
  l1.prior = PriorSpec::make_sparse(1.0, 0.25);

  const QuadratureRule& r80 = gauss_hermite(80);
  const QuadratureRule& r160 = gauss_hermite(160);
  for (const ProblemSpec& spec : {l2, l1}) {
    for (int i = 0; i < 5; ++i) {
      const FixedPoint v{u(rng), u(rng), u(rng), u(rng), u(rng), u(rng)};
      const FixedPoint a = system_map(v, spec, r80).value;
      const FixedPoint b = system_map(v, spec, r160).value;
      CHECK(std::abs(a.alpha - b.alpha) < 1e-9);
      CHECK(std::abs(a.sigma - b.sigma) < 1e-9);
      CHECK(std::abs(a.gamma - b.gamma) < 1e-9);
      CHECK(std::abs(a.theta - b.theta) < 1e-9);
      CHECK(std::abs(a.tau - b.tau) < 1e-9);
      CHECK(std::abs(a.r - b.r) < 1e-9);
    }
  }
}

TEST_CASE("prior validation") {
  CHECK_THROWS_AS(PriorSpec::make_gaussian(0.0), std::invalid_argument);
  CHECK_THROWS_AS(PriorSpec::make_sparse(1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(PriorSpec::make_sparse(1.0, 1.5), std::invalid_argument);
  CHECK_NOTHROW(PriorSpec::make_sparse(1.0, 1.0));
}
