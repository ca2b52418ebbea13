#pragma once

#include <functional>
#include <optional>

#include "rlr/expectation.hpp"
#include "rlr/prox.hpp"
#include "rlr/scalar_math.hpp"

namespace rlr {

// Problem parameters: signal strength kappa = ||beta*||/sqrt(p), oversampling
// delta = n/p, penalty weight lambda, plus the regularizer and prior choices.
struct ProblemSpec {
  double kappa = 1.0;
  double delta = 2.0;
  double lambda = 0.0;
  RegularizerSpec regularizer{Regularizer::l2sq};
  PriorSpec prior{};

  void validate() const;  // throws std::invalid_argument
};

// The six unknowns of the asymptotic description.
struct FixedPoint {
  double alpha = 0.5;
  double sigma = 1.0;
  double gamma = 1.0;
  double theta = 1.0;
  double tau = 1.0;
  double r = 1.0;
};

struct SolverKnobs {
  double damping = 1.0;   // initial step weight, halved on trouble (floor 1/64)
  double tol = 1e-10;     // on ||v - S(v)||_inf
  int max_iter = 2000;
  int quad_order = 80;
  FixedPoint init{0.5, 1.0, 1.0, 1.0, 1.0, 1.0};
  // Evaluate the regularizer-side expectations by their Q-function /
  // rescaling closed forms instead of quadrature. Both routes are kept as
  // mutual oracles; quadrature is the default.
  bool closed_form_ftilde = false;
};

struct SystemMapResult {
  FixedPoint value;
  bool feasible = true;  // false: clamped radicand, nonpositive scale, or tau update skipped
};

// One application of the six-equation map S. Each line is solved for its
// designated unknown with all expectations evaluated at v:
//   line 1 -> alpha, line 2 -> gamma, line 3 -> sigma (sigma^2 = RHS - kappa^2 alpha_new^2,
//   floored at 1e-12), line 4 -> r, line 5 -> theta, line 6 -> tau.
SystemMapResult system_map(const FixedPoint& v, const ProblemSpec& spec,
                           const QuadratureRule& rule,
                           bool closed_form_ftilde = false);

struct SolveResult {
  FixedPoint point;
  double residual = 0.0;  // ||v - S(v)||_inf at the returned point
  int iterations = 0;
  bool converged = false;
};

// Damped iteration v <- (1-w)v + w S(v). lambda = 0 is routed through the
// reduced three-equation path (the maximum-likelihood case) and polished on
// the full map.
SolveResult solve_fixed_point(const ProblemSpec& spec, const SolverKnobs& knobs = {});

// Three-equation reduction available for the l2sq and none regularizers:
// solves for (alpha, sigma, gamma) and reconstructs (theta, tau, r) from
//   theta = alpha/(gamma delta), tau = delta gamma/(sigma(1 - lambda delta gamma)),
//   r = sigma/(gamma sqrt(delta)).
// Throws std::runtime_error if lambda*delta*gamma >= 1 at the solution.
SolveResult solve_l2_reduced(const ProblemSpec& spec, const SolverKnobs& knobs = {});

// Scalar limit map: Prox_{lambda sigma tau f~}(sigma tau (theta*beta + (r/sqrt(delta))*z)).
double gamma_map(double beta, double z, const FixedPoint& v, const ProblemSpec& spec);

// E[psi(Gamma(beta, Z), beta)] for locally-Lipschitz psi.
double predict_functional(const Integrand2& psi, const FixedPoint& v,
                          const ProblemSpec& spec, const QuadratureRule& rule);

struct SupportRecovery {
  double t_offsupport = 0.0;  // lambda / (r/sqrt(delta))
  double t_onsupport = 0.0;   // lambda / sqrt(r^2/delta + theta^2 kappa^2 / s)
  double e1 = 0.0;            // false alarm:  2 Q(t_offsupport)
  double e2 = 0.0;            // misdetection: 1 - 2 Q(t_onsupport)
};

// Requires sparse prior, l1 regularizer, lambda > 0.
SupportRecovery predict_support_recovery(const FixedPoint& v, const ProblemSpec& spec);

struct TheoryReport {
  FixedPoint fixed_point;
  double correlation = 0.0;    // alpha-bar
  double variance = 0.0;       // sigma-bar^2
  double mse_raw = 0.0;        // E[(Gamma(beta,Z) - beta)^2]
  double mse_debiased = 0.0;   // variance / correlation^2
  double residual = 0.0;
  bool converged = false;
  std::optional<SupportRecovery> support;
};

TheoryReport theory_report(const ProblemSpec& spec, const SolverKnobs& knobs = {});

}  // namespace rlr
