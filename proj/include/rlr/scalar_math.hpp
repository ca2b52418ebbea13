#pragma once

#include <span>
#include <vector>

namespace rlr {

// Link function rho(z) = log(1 + e^z) and its first two derivatives.
// Overflow-safe for the full finite double range.
double rho(double z);
double rho_prime(double z);   // logistic sigmoid, in (0, 1)
double rho_second(double z);  // in (0, 1/4]

// Standard normal upper tail Q(t) and density phi(t).
double q_function(double t);
double normal_pdf(double t);

// Deterministic pairwise summation; reduction order depends only on size.
double pairwise_sum(std::span<const double> xs);

struct QuadratureRule {
  std::vector<double> nodes;    // strictly increasing
  std::vector<double> weights;  // positive, sum to 1
  int order = 0;
};

// Gauss-Hermite rule expressed against the standard normal measure, so
// E[f(Z)] ~ sum_i w_i f(x_i). Nodes via Golub-Welsch (symmetric tridiagonal
// eigenvalues), weights from the orthonormal recurrence. Cached per order;
// the returned rule is immutable and safe to share across threads.
const QuadratureRule& gauss_hermite(int order);

// Gauss-Legendre nodes/weights on [-1,1]; weights sum to 2. Used for the
// piecewise panels of kink-aware integration.
struct PanelRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
const PanelRule& gauss_legendre(int order);

}  // namespace rlr
