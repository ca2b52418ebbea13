#include "rlr/selftest.hpp"

#include <chrono>
#include <cmath>
#include <random>
#include <sstream>

#include "rlr/expectation.hpp"
#include "rlr/prox.hpp"
#include "rlr/scalar_math.hpp"
#include "rlr/solver.hpp"

namespace rlr {

namespace {

struct Check {
  bool pass = true;
  double worst = 0.0;
  std::string detail;

  void expect(double err, double tol, const std::string& what) {
    worst = std::max(worst, err);
    if (!(err <= tol) && pass) {
      pass = false;
      std::ostringstream os;
      os << what << ": |err| = " << err << " > " << tol;
      detail = os.str();
    }
  }
};

// d/dx and d/dt of the Moreau envelope against centered differences.
Check suite_moreau_derivative() {
  Check c;
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> ux(-6.0, 6.0), ut(0.2, 4.0);
  const RegularizerSpec regs[] = {{Regularizer::none}, {Regularizer::l1}, {Regularizer::l2sq}};
  const double h = 1e-5;
  for (int i = 0; i < 60; ++i) {
    const double x = ux(rng), t = ut(rng);
    for (const RegularizerSpec& f : regs) {
      const double p = f.prox(x, t);
      const double dx = (x - p) / t;
      const double dt = -(x - p) * (x - p) / (2.0 * t * t);
      const double fd_x = (moreau_envelope(f, x + h, t) - moreau_envelope(f, x - h, t)) / (2 * h);
      const double fd_t = (moreau_envelope(f, x, t + h) - moreau_envelope(f, x, t - h)) / (2 * h);
      c.expect(std::abs(dx - fd_x), 1e-5, std::string(f.name()) + " d/dx");
      c.expect(std::abs(dt - fd_t), 1e-5, std::string(f.name()) + " d/dt");
    }
    const double p = prox_rho(x, t);
    const double dx = (x - p) / t;
    const double dt = -(x - p) * (x - p) / (2.0 * t * t);
    const double fd_x = (moreau_envelope_rho(x + h, t) - moreau_envelope_rho(x - h, t)) / (2 * h);
    const double fd_t = (moreau_envelope_rho(x, t + h) - moreau_envelope_rho(x, t - h)) / (2 * h);
    c.expect(std::abs(dx - fd_x), 1e-5, "rho d/dx");
    c.expect(std::abs(dt - fd_t), 1e-5, "rho d/dt");
  }
  return c;
}

// prox_rho(x + t, t) = -prox_rho(-x, t) on a random grid.
Check suite_prox_shift_identity() {
  Check c;
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> ux(-8.0, 8.0), ut(1e-3, 5.0);
  for (int i = 0; i < 100; ++i) {
    const double x = ux(rng), t = ut(rng);
    c.expect(std::abs(prox_rho(x + t, t) + prox_rho(-x, t)), 1e-10, "shift identity");
  }
  return c;
}

Check suite_prox_derivative() {
  Check c;
  std::mt19937_64 rng(303);
  std::uniform_real_distribution<double> ux(-6.0, 6.0), ut(0.1, 4.0);
  const double h = 1e-5;
  for (int i = 0; i < 60; ++i) {
    const double x = ux(rng), t = ut(rng);
    const double fd = (prox_rho(x + h, t) - prox_rho(x - h, t)) / (2 * h);
    c.expect(std::abs(prox_rho_derivative(x, t) - fd), 1e-6, "prox_rho'");
  }
  return c;
}

// E[Z f(Z)] = E[f'(Z)] specialized to f = rho'(k .): E[Z rho'(kZ)] = k E[rho''(kZ)].
Check suite_stein(const QuadratureRule& rule) {
  Check c;
  for (double k : {0.5, 1.0, 2.0}) {
    const double lhs = expect_z([&](double z) { return z * rho_prime(k * z); }, rule);
    const double rhs = k * expect_z([&](double z) { return rho_second(k * z); }, rule);
    c.expect(std::abs(lhs - rhs), 1e-8, "stein k=" + std::to_string(k));
  }
  return c;
}

// Q-function closed forms of the soft-threshold expectations against direct
// quadrature, at random feasible six-vectors.
Check suite_softthreshold_closed_vs_quadrature(const QuadratureRule& rule) {
  Check c;
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> u(0.1, 3.0);
  ProblemSpec spec;
  spec.kappa = 1.0;
  spec.delta = 4.0;
  spec.lambda = 0.8;
  spec.regularizer = {Regularizer::l1};
  spec.prior = PriorSpec::make_sparse(1.0, 0.25);
  for (int i = 0; i < 20; ++i) {
    FixedPoint v{u(rng), u(rng), u(rng), u(rng), u(rng), u(rng)};
    const auto quad = system_map(v, spec, rule, false);
    const auto closed = system_map(v, spec, rule, true);
    c.expect(std::abs(quad.value.alpha - closed.value.alpha), 1e-8, "alpha line");
    c.expect(std::abs(quad.value.gamma - closed.value.gamma), 1e-8, "gamma line");
    c.expect(std::abs(quad.value.sigma - closed.value.sigma), 1e-8, "sigma line");
  }
  return c;
}

// Doubling the quadrature order must not move the map output.
Check suite_quadrature_doubling(int order) {
  Check c;
  const QuadratureRule& r1 = gauss_hermite(order);
  const QuadratureRule& r2 = gauss_hermite(std::min(200, 2 * order));
  std::mt19937_64 rng(505);
  std::uniform_real_distribution<double> u(0.1, 3.0);
  ProblemSpec specs[2];
  specs[0].kappa = 1.0; specs[0].delta = 3.0; specs[0].lambda = 0.4;
  specs[0].regularizer = {Regularizer::l2sq};
  specs[0].prior = PriorSpec::make_gaussian(1.0);
  specs[1].kappa = 1.0; specs[1].delta = 4.0; specs[1].lambda = 0.8;
  specs[1].regularizer = {Regularizer::l1};
  specs[1].prior = PriorSpec::make_sparse(1.0, 0.25);
  for (const ProblemSpec& spec : specs) {
    for (int i = 0; i < 3; ++i) {
      FixedPoint v{u(rng), u(rng), u(rng), u(rng), u(rng), u(rng)};
      const FixedPoint a = system_map(v, spec, r1, false).value;
      const FixedPoint b = system_map(v, spec, r2, false).value;
      c.expect(std::abs(a.alpha - b.alpha), 1e-9, "alpha stability");
      c.expect(std::abs(a.sigma - b.sigma), 1e-9, "sigma stability");
      c.expect(std::abs(a.gamma - b.gamma), 1e-9, "gamma stability");
      c.expect(std::abs(a.theta - b.theta), 1e-9, "theta stability");
      c.expect(std::abs(a.r - b.r), 1e-9, "r stability");
    }
  }
  return c;
}

// First-order optimality and nonexpansiveness of every prox.
Check suite_prox_properties() {
  Check c;
  std::mt19937_64 rng(606);
  std::uniform_real_distribution<double> ux(-10.0, 10.0), ut(1e-3, 5.0);
  const RegularizerSpec regs[] = {{Regularizer::none}, {Regularizer::l1}, {Regularizer::l2sq}};
  for (int i = 0; i < 100; ++i) {
    const double x = ux(rng), y = ux(rng), t = ut(rng);
    for (const RegularizerSpec& f : regs) {
      const double p = f.prox(x, t);
      if (f.kind == Regularizer::l1) {
        if (p != 0.0)
          c.expect(std::abs((x - p) / t - std::copysign(1.0, p)), 1e-10, "l1 stationarity");
        else
          c.expect(std::max(0.0, std::abs(x) / t - 1.0), 1e-10, "l1 subgradient");
      } else if (f.kind == Regularizer::l2sq) {
        c.expect(std::abs((x - p) / t - p), 1e-10, "l2sq stationarity");
      } else {
        c.expect(std::abs(p - x), 0.0, "none identity");
      }
      c.expect(std::max(0.0, std::abs(f.prox(x, t) - f.prox(y, t)) - std::abs(x - y)),
               1e-12, std::string(f.name()) + " nonexpansive");
    }
    const double p = prox_rho(x, t);
    c.expect(std::abs((x - p) / t - rho_prime(p)) * t, 1e-10, "rho stationarity");
    c.expect(std::max(0.0, std::abs(prox_rho(x, t) - prox_rho(y, t)) - std::abs(x - y)),
             1e-12, "rho nonexpansive");
  }
  return c;
}

// Full vs reduced route on one l2sq cell.
Check suite_reduction_consistency(int order) {
  Check c;
  ProblemSpec spec;
  spec.kappa = 1.0;
  spec.delta = 4.0;
  spec.lambda = 0.5;
  spec.regularizer = {Regularizer::l2sq};
  spec.prior = PriorSpec::make_gaussian(1.0);
  SolverKnobs knobs;
  knobs.quad_order = order;
  const SolveResult full = solve_fixed_point(spec, knobs);
  const SolveResult red = solve_l2_reduced(spec, knobs);
  c.expect(std::abs(full.point.alpha - red.point.alpha), 1e-6, "alpha");
  c.expect(std::abs(full.point.sigma - red.point.sigma), 1e-6, "sigma");
  c.expect(std::abs(full.point.gamma - red.point.gamma), 1e-6, "gamma");
  c.expect(std::abs(full.point.theta - red.point.theta), 1e-6, "theta");
  c.expect(std::abs(full.point.tau - red.point.tau), 1e-6, "tau");
  c.expect(std::abs(full.point.r - red.point.r), 1e-6, "r");
  c.expect(full.converged ? 0.0 : 1.0, 0.5, "full converged");
  return c;
}

}  // namespace

std::vector<SuiteResult> run_selftest(int quad_order) {
  const QuadratureRule& rule = gauss_hermite(quad_order);
  std::vector<std::pair<std::string, std::function<Check()>>> suites = {
      {"moreau-derivative-vs-fd", [] { return suite_moreau_derivative(); }},
      {"prox-shift-identity", [] { return suite_prox_shift_identity(); }},
      {"prox-derivative-vs-fd", [] { return suite_prox_derivative(); }},
      {"stein-identity-quadrature", [&] { return suite_stein(rule); }},
      {"softthreshold-closedform-vs-quadrature",
       [&] { return suite_softthreshold_closed_vs_quadrature(rule); }},
      {"quadrature-order-doubling", [&] { return suite_quadrature_doubling(quad_order); }},
      {"prox-optimality-nonexpansive", [] { return suite_prox_properties(); }},
      {"l2sq-full-vs-reduced", [&] { return suite_reduction_consistency(quad_order); }},
  };

  std::vector<SuiteResult> out;
  for (auto& [name, fn] : suites) {
    const auto t0 = std::chrono::steady_clock::now();
    Check c = fn();
    const double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
            .count();
    std::ostringstream detail;
    if (c.pass)
      detail << "worst |err| = " << c.worst;
    else
      detail << c.detail;
    out.push_back({name, c.pass, ms, detail.str()});
  }
  return out;
}

}  // namespace rlr
