#include "rlr/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace rlr {

namespace {

constexpr double kSigma2Floor = 1e-12;
constexpr double kDampingFloor = 1.0 / 64.0;

bool all_finite(const FixedPoint& v) {
  return std::isfinite(v.alpha) && std::isfinite(v.sigma) && std::isfinite(v.gamma) &&
         std::isfinite(v.theta) && std::isfinite(v.tau) && std::isfinite(v.r);
}

double inf_norm_diff(const FixedPoint& a, const FixedPoint& b) {
  double m = std::abs(a.alpha - b.alpha);
  m = std::max(m, std::abs(a.sigma - b.sigma));
  m = std::max(m, std::abs(a.gamma - b.gamma));
  m = std::max(m, std::abs(a.theta - b.theta));
  m = std::max(m, std::abs(a.tau - b.tau));
  m = std::max(m, std::abs(a.r - b.r));
  return m;
}

FixedPoint lerp(const FixedPoint& a, const FixedPoint& b, double w) {
  auto mix = [w](double x, double y) { return (1.0 - w) * x + w * y; };
  return {mix(a.alpha, b.alpha), mix(a.sigma, b.sigma), mix(a.gamma, b.gamma),
          mix(a.theta, b.theta), mix(a.tau, b.tau), mix(a.r, b.r)};
}

// Expectations over (beta, Z) entering the first three equations, all at the
// regularizer prox argument c*(theta*beta + (r/sqrt(delta))*Z) with scale
// t = lambda*c, c = sigma*tau.
struct FtildeMoments {
  double e_beta_prox;  // E[beta * Prox]
  double e_z_prox;     // E[Z * Prox]
  double e_prox_sq;    // E[Prox^2]
};

// Kink geometry of the soft-threshold integrands: exact z kinks at
// theta*beta + b*z = +-lambda for fixed beta, and beta-bands of width b/theta
// around beta = +-lambda/theta where the z-averaged integrand transitions.
KinkStructure l1_kink_structure(const FixedPoint& v, const ProblemSpec& spec) {
  const double b = v.r / std::sqrt(spec.delta);
  KinkStructure ks;
  ks.z_kinks = [lambda = spec.lambda, theta = v.theta, b](double beta,
                                                          std::vector<double>& zs) {
    zs.push_back((lambda - theta * beta) / b);
    zs.push_back((-lambda - theta * beta) / b);
  };
  if (std::abs(v.theta) > 1e-300) {
    const double scale = std::abs(b / v.theta);
    ks.beta_bands = {{spec.lambda / v.theta, scale}, {-spec.lambda / v.theta, scale}};
  }
  return ks;
}

bool use_kink_route(const FixedPoint& v, const ProblemSpec& spec) {
  return spec.regularizer.kind == Regularizer::l1 && spec.lambda > 0.0 &&
         v.sigma * v.tau != 0.0 && v.r != 0.0;
}

FtildeMoments ftilde_moments_quadrature(const FixedPoint& v, const ProblemSpec& spec,
                                        const QuadratureRule& rule) {
  const double c = v.sigma * v.tau;
  const double t = spec.lambda * c;
  const double b = v.r / std::sqrt(spec.delta);
  const RegularizerSpec& f = spec.regularizer;
  auto arg = [&](double beta, double z) { return c * (v.theta * beta + b * z); };

  FtildeMoments m;
  if (use_kink_route(v, spec)) {
    const KinkStructure ks = l1_kink_structure(v, spec);
    m.e_beta_prox = expect_prior_z(
        [&](double beta, double z) { return beta * f.prox(arg(beta, z), t); },
        ks, spec.prior, rule);
    m.e_z_prox = expect_prior_z(
        [&](double beta, double z) { return z * f.prox(arg(beta, z), t); },
        ks, spec.prior, rule);
    m.e_prox_sq = expect_prior_z(
        [&](double beta, double z) {
          const double p = f.prox(arg(beta, z), t);
          return p * p;
        },
        ks, spec.prior, rule);
    return m;
  }

  m.e_beta_prox = expect_prior_z(
      [&](double beta, double z) { return beta * f.prox(arg(beta, z), t); },
      spec.prior, rule);
  m.e_z_prox = expect_prior_z(
      [&](double beta, double z) { return z * f.prox(arg(beta, z), t); },
      spec.prior, rule);
  m.e_prox_sq = expect_prior_z(
      [&](double beta, double z) {
        const double p = f.prox(arg(beta, z), t);
        return p * p;
      },
      spec.prior, rule);
  return m;
}

// Closed forms of the same three expectations. For l2sq the prox is a
// rescaling; for l1 with a (possibly degenerate, s=1) Gaussian-mixture prior
// they reduce to Q-function expressions in the two thresholds
//   t_on  = lambda / sqrt(r^2/delta + theta^2 kappa^2 / s),
//   t_off = lambda / (r/sqrt(delta)).
FtildeMoments ftilde_moments_closed(const FixedPoint& v, const ProblemSpec& spec) {
  const double c = v.sigma * v.tau;
  const double t = spec.lambda * c;
  const double kappa2 = spec.kappa * spec.kappa;
  const double b = v.r / std::sqrt(spec.delta);

  switch (spec.regularizer.kind) {
    case Regularizer::none:
    case Regularizer::l2sq: {
      const double shrink = spec.regularizer.kind == Regularizer::none
                                ? 1.0
                                : 1.0 / (1.0 + t);
      FtildeMoments m;
      m.e_beta_prox = kappa2 * c * v.theta * shrink;
      m.e_z_prox = c * b * shrink;
      m.e_prox_sq =
          c * c * (v.theta * v.theta * kappa2 + b * b) * shrink * shrink;
      return m;
    }
    case Regularizer::l1: {
      const double s =
          spec.prior.kind == PriorSpec::Kind::sparse ? spec.prior.sparsity : 1.0;
      const double on_var = b * b + v.theta * v.theta * kappa2 / s;  // per-coordinate, on support
      const double t_on = spec.lambda / std::sqrt(on_var);
      const double t_off = spec.lambda / b;
      const double q_on = q_function(t_on);
      const double q_off = q_function(t_off);
      const double lam2 = spec.lambda * spec.lambda;
      FtildeMoments m;
      m.e_beta_prox = 2.0 * kappa2 * c * v.theta * q_on;
      m.e_z_prox = 2.0 * c * b * (s * q_on + (1.0 - s) * q_off);
      m.e_prox_sq =
          2.0 * c * c *
          ((b * b + lam2) * (s * q_on + (1.0 - s) * q_off) +
           kappa2 * v.theta * v.theta * q_on -
           lam2 * (s * normal_pdf(t_on) / t_on + (1.0 - s) * normal_pdf(t_off) / t_off));
      return m;
    }
  }
  throw std::logic_error("unreachable regularizer kind");
}

// Expectations over (Z1, Z2) entering the last three equations, sharing one
// warm-started prox field over the tensor grid.
struct RhoMoments {
  double e_weighted_resid2;  // E[rho'(-kZ1) (W - Prox_{g rho}(W))^2],  W = k a Z1 + s Z2
  double e_curv_prox;        // E[rho''(-kZ1) Prox_{g rho}(W)]
  double e_contraction;      // E[2 rho'(-kZ1) / (1 + g rho''(Prox_{g rho}(W)))]
};

RhoMoments rho_moments(double alpha, double sigma, double gamma, double kappa,
                       const QuadratureRule& rule) {
  const std::size_t n = rule.nodes.size();
  std::vector<double> row1(n), row2(n), row3(n), t1(n), t2(n), t3(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double z1 = rule.nodes[i];
    const double w_resid = rho_prime(-kappa * z1);
    const double w_curv = rho_second(-kappa * z1);
    const double base = kappa * alpha * z1;
    double warm = base + sigma * rule.nodes[0];
    for (std::size_t j = 0; j < n; ++j) {
      const double x = base + sigma * rule.nodes[j];
      const double p = prox_rho(x, gamma, warm);
      warm = p;
      const double d = x - p;
      const double wj = rule.weights[j];
      t1[j] = wj * w_resid * d * d;
      t2[j] = wj * w_curv * p;
      t3[j] = wj * 2.0 * w_resid / (1.0 + gamma * rho_second(p));
    }
    const double wi = rule.weights[i];
    row1[i] = wi * pairwise_sum(t1);
    row2[i] = wi * pairwise_sum(t2);
    row3[i] = wi * pairwise_sum(t3);
  }
  return {pairwise_sum(row1), pairwise_sum(row2), pairwise_sum(row3)};
}

}  // namespace

void ProblemSpec::validate() const {
  if (!(kappa > 0.0)) throw std::invalid_argument("spec: kappa must be > 0");
  if (!(delta > 0.0)) throw std::invalid_argument("spec: delta must be > 0");
  if (!(lambda >= 0.0)) throw std::invalid_argument("spec: lambda must be >= 0");
  if (regularizer.kind == Regularizer::none && lambda != 0.0)
    throw std::invalid_argument("spec: regularizer 'none' requires lambda = 0");
  if (std::abs(prior.kappa - kappa) > 1e-12)
    throw std::invalid_argument("spec: prior.kappa must equal kappa");
  prior.validate();
}

SystemMapResult system_map(const FixedPoint& v, const ProblemSpec& spec,
                           const QuadratureRule& rule, bool closed_form_ftilde) {
  const double kappa2 = spec.kappa * spec.kappa;
  const double sqrt_delta = std::sqrt(spec.delta);

  const FtildeMoments fm = closed_form_ftilde
                               ? ftilde_moments_closed(v, spec)
                               : ftilde_moments_quadrature(v, spec, rule);
  const RhoMoments rm = rho_moments(v.alpha, v.sigma, v.gamma, spec.kappa, rule);

  bool feasible = true;
  FixedPoint out;
  out.alpha = fm.e_beta_prox / kappa2;
  out.gamma = fm.e_z_prox / (v.r * sqrt_delta);
  double sigma2 = fm.e_prox_sq - kappa2 * out.alpha * out.alpha;
  if (!(sigma2 >= kSigma2Floor)) {
    sigma2 = kSigma2Floor;
    feasible = false;
  }
  out.sigma = std::sqrt(sigma2);
  out.r = std::sqrt(2.0 * rm.e_weighted_resid2) / v.gamma;
  out.theta = -2.0 * rm.e_curv_prox / v.gamma;
  if (rm.e_contraction < 1.0) {
    out.tau = v.gamma / (v.sigma * (1.0 - rm.e_contraction));
  } else {
    out.tau = v.tau;
    feasible = false;
  }
  if (!all_finite(out) || !(out.sigma > 0.0) || !(out.gamma > 0.0) ||
      !(out.tau > 0.0) || !(out.r > 0.0))
    feasible = false;
  return {out, feasible};
}

namespace {

// Keep iterates inside a sane box: absurd scales would otherwise feed the
// next map evaluation (e.g. a prox solve with a bracket wider than any
// bisection budget).
FixedPoint clamp_iterate(FixedPoint v) {
  auto pos = [](double x) { return std::clamp(x, 1e-10, 1e10); };
  v.alpha = std::clamp(v.alpha, -1e10, 1e10);
  v.theta = std::clamp(v.theta, -1e10, 1e10);
  v.sigma = pos(v.sigma);
  v.gamma = pos(v.gamma);
  v.tau = pos(v.tau);
  v.r = pos(v.r);
  return v;
}

// Shared damped-iteration engine. step(v) must return the candidate state
// plus a feasibility flag; residual is the inf-norm of the step.
template <typename StepFn>
SolveResult damped_iterate(FixedPoint v, const SolverKnobs& knobs, StepFn&& step) {
  const double omega_cap = std::clamp(knobs.damping, kDampingFloor, 1.0);
  double omega = omega_cap;
  double best_res = std::numeric_limits<double>::infinity();
  double prev_res = std::numeric_limits<double>::infinity();
  FixedPoint best = v;
  int rises = 0, stall = 0, improving = 0;
  double res = std::numeric_limits<double>::infinity();

  for (int it = 1; it <= knobs.max_iter; ++it) {
    auto [sv, feasible] = step(v);
    const bool finite = all_finite(sv);
    res = finite ? inf_norm_diff(v, sv) : std::numeric_limits<double>::infinity();
    if (res <= knobs.tol) return {v, res, it, true};

    const bool blowup =
        !finite || (std::isfinite(best_res) && res > std::max(10.0 * best_res, 1e3));
    if (!feasible || blowup) omega = std::max(omega / 2.0, kDampingFloor);
    rises = (res > prev_res) ? rises + 1 : 0;
    if (rises >= 5) {
      omega = std::max(omega / 2.0, kDampingFloor);
      rises = 0;
    }
    if (res < prev_res) {
      // Sustained contraction: grow the step back toward the configured cap.
      if (++improving >= 30) {
        omega = std::min(2.0 * omega, omega_cap);
        improving = 0;
      }
    } else {
      improving = 0;
    }
    if (res < best_res * (1.0 - 1e-3)) {
      best_res = res;
      best = v;
      stall = 0;
    } else if (++stall >= 50) {
      // Plateau (e.g. a period-2 oscillation): the rise counter never fires,
      // so damp on lack of progress as well.
      omega = std::max(omega / 2.0, kDampingFloor);
      stall = 0;
    }
    prev_res = res;
    if (blowup) {
      v = best;
      continue;
    }
    if (!finite) continue;
    v = clamp_iterate(lerp(v, sv, omega));
  }
  // Out of budget: report the best iterate with its true residual.
  auto [sv, feasible] = step(best);
  (void)feasible;
  const double final_res =
      all_finite(sv) ? inf_norm_diff(best, sv) : std::numeric_limits<double>::infinity();
  if (res < final_res) return {v, res, knobs.max_iter, false};
  return {best, final_res, knobs.max_iter, false};
}

// Reduced path internals: the last three equations in (alpha, sigma, gamma)
// after eliminating (theta, tau, r).
struct ReducedState {
  double alpha, sigma, gamma;
};

double contraction_residual(double alpha, double sigma, double gamma,
                            const ProblemSpec& spec, const QuadratureRule& rule) {
  const RhoMoments rm = rho_moments(alpha, sigma, gamma, spec.kappa, rule);
  return rm.e_contraction - (1.0 - 1.0 / spec.delta + spec.lambda * gamma);
}

// Root of E[2 rho'(-kZ1)/(1 + g rho''(...))] = 1 - 1/delta + lambda*g in g.
// The left side decreases from 1 to 0, the right side is nondecreasing, so
// the root is unique; plain bisection after bracket growth.
double solve_gamma(double alpha, double sigma, const ProblemSpec& spec,
                   const QuadratureRule& rule, double hint) {
  double hi = std::max(hint, 1e-3);
  double h_hi = contraction_residual(alpha, sigma, hi, spec, rule);
  int grow = 0;
  while (h_hi > 0.0) {
    hi *= 2.0;
    if (++grow > 60) throw std::runtime_error("solve_gamma: bracket growth failed");
    h_hi = contraction_residual(alpha, sigma, hi, spec, rule);
  }
  double lo = 0.0;  // residual at 0+ is 1/delta > 0
  for (int it = 0; it < 90; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (hi - lo <= 1e-13 * std::max(1.0, hi)) break;
    if (contraction_residual(alpha, sigma, mid, spec, rule) > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

FixedPoint reconstruct_from_reduced(const ReducedState& x, const ProblemSpec& spec) {
  FixedPoint v;
  v.alpha = x.alpha;
  v.sigma = x.sigma;
  v.gamma = x.gamma;
  v.theta = x.alpha / (x.gamma * spec.delta);
  v.r = x.sigma / (x.gamma * std::sqrt(spec.delta));
  const double denom = 1.0 - spec.lambda * spec.delta * x.gamma;
  if (!(denom > 0.0))
    throw std::runtime_error(
        "solve_l2_reduced: lambda*delta*gamma >= 1, tau reconstruction infeasible");
  v.tau = spec.delta * x.gamma / (x.sigma * denom);
  return v;
}

}  // namespace

SolveResult solve_l2_reduced(const ProblemSpec& spec, const SolverKnobs& knobs) {
  spec.validate();
  if (spec.regularizer.kind == Regularizer::l1)
    throw std::invalid_argument("solve_l2_reduced: requires l2sq or none regularizer");
  const QuadratureRule& rule = gauss_hermite(knobs.quad_order);

  double gamma_hint = knobs.init.gamma;
  auto step = [&](const FixedPoint& v) -> SystemMapResult {
    const double gamma_new =
        solve_gamma(v.alpha, v.sigma, spec, rule, gamma_hint);
    gamma_hint = gamma_new;
    const RhoMoments rm = rho_moments(v.alpha, v.sigma, gamma_new, spec.kappa, rule);
    FixedPoint out = v;
    out.gamma = gamma_new;
    out.sigma = std::sqrt(2.0 * spec.delta * rm.e_weighted_resid2);
    out.alpha = -2.0 * spec.delta * rm.e_curv_prox;
    const bool ok = std::isfinite(out.alpha) && out.sigma > 0.0 && out.gamma > 0.0;
    return {out, ok};
  };

  FixedPoint start = knobs.init;
  start.theta = start.tau = start.r = 1.0;  // unused by the reduced step
  SolveResult red = damped_iterate(start, knobs, step);
  const FixedPoint full =
      reconstruct_from_reduced({red.point.alpha, red.point.sigma, red.point.gamma}, spec);
  return {full, red.residual, red.iterations, red.converged};
}

SolveResult solve_fixed_point(const ProblemSpec& spec, const SolverKnobs& knobs) {
  spec.validate();
  const QuadratureRule& rule = gauss_hermite(knobs.quad_order);

  if (spec.lambda == 0.0) {
    // Maximum-likelihood case: the designated path is the reduced system;
    // polish on the full map so the returned residual is the six-equation one.
    if (spec.regularizer.kind == Regularizer::l1)
      throw std::invalid_argument(
          "solve_fixed_point: lambda = 0 with l1 is not supported; use regularizer none");
    SolveResult red = solve_l2_reduced(spec, knobs);
    auto [sv, feasible] = system_map(red.point, spec, rule, knobs.closed_form_ftilde);
    (void)feasible;
    double res = inf_norm_diff(red.point, sv);
    if (res <= knobs.tol) return {red.point, res, red.iterations, red.converged};
    SolverKnobs polish = knobs;
    polish.init = red.point;
    polish.max_iter = std::max(50, knobs.max_iter / 4);
    SolveResult out = damped_iterate(red.point, polish, [&](const FixedPoint& v) {
      return system_map(v, spec, rule, knobs.closed_form_ftilde);
    });
    out.iterations += red.iterations;
    out.converged = out.converged && red.converged;
    return out;
  }

  return damped_iterate(knobs.init, knobs, [&](const FixedPoint& v) {
    return system_map(v, spec, rule, knobs.closed_form_ftilde);
  });
}

double gamma_map(double beta, double z, const FixedPoint& v, const ProblemSpec& spec) {
  const double c = v.sigma * v.tau;
  return spec.regularizer.prox(c * (v.theta * beta + v.r / std::sqrt(spec.delta) * z),
                               spec.lambda * c);
}

double predict_functional(const Integrand2& psi, const FixedPoint& v,
                          const ProblemSpec& spec, const QuadratureRule& rule) {
  auto g = [&](double beta, double z) {
    return psi(gamma_map(beta, z, v, spec), beta);
  };
  if (use_kink_route(v, spec))
    return expect_prior_z(g, l1_kink_structure(v, spec), spec.prior, rule);
  return expect_prior_z(g, spec.prior, rule);
}

SupportRecovery predict_support_recovery(const FixedPoint& v, const ProblemSpec& spec) {
  if (spec.prior.kind != PriorSpec::Kind::sparse ||
      spec.regularizer.kind != Regularizer::l1 || !(spec.lambda > 0.0))
    throw std::invalid_argument(
        "predict_support_recovery: requires sparse prior, l1 regularizer, lambda > 0");
  const double b = v.r / std::sqrt(spec.delta);
  const double on_scale = std::sqrt(
      b * b + v.theta * v.theta * spec.kappa * spec.kappa / spec.prior.sparsity);
  SupportRecovery s;
  s.t_offsupport = spec.lambda / b;
  s.t_onsupport = spec.lambda / on_scale;
  s.e1 = 2.0 * q_function(s.t_offsupport);
  s.e2 = 1.0 - 2.0 * q_function(s.t_onsupport);
  return s;
}

TheoryReport theory_report(const ProblemSpec& spec, const SolverKnobs& knobs) {
  spec.validate();
  const QuadratureRule& rule = gauss_hermite(knobs.quad_order);
  const SolveResult sol = solve_fixed_point(spec, knobs);

  TheoryReport rep;
  rep.fixed_point = sol.point;
  rep.residual = sol.residual;
  rep.converged = sol.converged;
  rep.correlation = sol.point.alpha;
  rep.variance = sol.point.sigma * sol.point.sigma;
  rep.mse_raw = predict_functional(
      [](double u, double b) { return (u - b) * (u - b); }, sol.point, spec, rule);
  rep.mse_debiased = rep.correlation != 0.0
                         ? rep.variance / (rep.correlation * rep.correlation)
                         : std::numeric_limits<double>::infinity();
  if (spec.prior.kind == PriorSpec::Kind::sparse &&
      spec.regularizer.kind == Regularizer::l1 && spec.lambda > 0.0)
    rep.support = predict_support_recovery(sol.point, spec);
  return rep;
}

}  // namespace rlr
