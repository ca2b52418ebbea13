#include "rlr/scalar_math.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace rlr {

double rho(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

double rho_prime(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double rho_second(double z) {
  const double e = std::exp(-std::abs(z));
  const double d = 1.0 + e;
  return e / (d * d);
}

double q_function(double t) {
  return 0.5 * std::erfc(t / std::numbers::sqrt2);
}

double normal_pdf(double t) {
  return std::exp(-0.5 * t * t) / std::sqrt(2.0 * std::numbers::pi);
}

double pairwise_sum(std::span<const double> xs) {
  const std::size_t n = xs.size();
  if (n <= 16) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

namespace {

// Eigenvalues of a symmetric tridiagonal matrix by the implicit-shift QL
// algorithm (eigenvalues only). diag has length n, off length n-1.
std::vector<double> tridiag_eigenvalues(std::vector<double> d, std::vector<double> e) {
  const int n = static_cast<int>(d.size());
  e.push_back(0.0);
  for (int l = 0; l < n; ++l) {
    int iter = 0;
    int m;
    do {
      for (m = l; m < n - 1; ++m) {
        const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
        if (std::abs(e[m]) <= std::numeric_limits<double>::epsilon() * dd) break;
      }
      if (m != l) {
        if (iter++ == 60)
          throw std::runtime_error("tridiag_eigenvalues: QL failed to converge");
        double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
        double r = std::hypot(g, 1.0);
        g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
        double s = 1.0, c = 1.0, p = 0.0;
        int i;
        for (i = m - 1; i >= l; --i) {
          double f = s * e[i];
          const double b = c * e[i];
          r = std::hypot(f, g);
          e[i + 1] = r;
          if (r == 0.0) {
            d[i + 1] -= p;
            e[m] = 0.0;
            break;
          }
          s = f / r;
          c = g / r;
          g = d[i + 1] - p;
          r = (d[i] - g) * s + 2.0 * c * b;
          p = s * r;
          d[i + 1] = g + p;
          g = c * r - b;
        }
        if (r == 0.0 && i >= l) continue;
        d[l] -= p;
        e[l] = g;
        e[m] = 0.0;
      }
    } while (m != l);
  }
  std::sort(d.begin(), d.end());
  return d;
}

QuadratureRule build_gauss_hermite(int order) {
  // Jacobi matrix of the orthonormal (probabilists') Hermite polynomials:
  // zero diagonal, off-diagonal sqrt(k).
  std::vector<double> diag(order, 0.0);
  std::vector<double> off(order - 1);
  for (int k = 1; k < order; ++k) off[k - 1] = std::sqrt(static_cast<double>(k));
  std::vector<double> nodes = tridiag_eigenvalues(diag, off);

  // Golub-Welsch weights: w_i = 1 / sum_{k<order} p_k(x_i)^2 with p_k the
  // orthonormal recurrence (measure already normalized to mass 1).
  std::vector<double> weights(order);
  for (int i = 0; i < order; ++i) {
    const double x = nodes[i];
    double pkm1 = 0.0, pk = 1.0, sumsq = 1.0;
    for (int k = 1; k < order; ++k) {
      const double pkp1 = (x * pk - std::sqrt(static_cast<double>(k - 1)) * pkm1) /
                          std::sqrt(static_cast<double>(k));
      pkm1 = pk;
      pk = pkp1;
      sumsq += pk * pk;
    }
    weights[i] = 1.0 / sumsq;
  }

  // Symmetrize node/weight pairs and renormalize; kills asymmetric roundoff
  // so odd moments vanish exactly.
  for (int i = 0, j = order - 1; i < j; ++i, --j) {
    const double x = 0.5 * (nodes[j] - nodes[i]);
    nodes[i] = -x;
    nodes[j] = x;
    const double w = 0.5 * (weights[i] + weights[j]);
    weights[i] = weights[j] = w;
  }
  if (order % 2 == 1) nodes[order / 2] = 0.0;
  const double total = pairwise_sum(weights);
  for (double& w : weights) w /= total;

  QuadratureRule rule{std::move(nodes), std::move(weights), order};
  for (int i = 1; i < order; ++i)
    if (!(rule.nodes[i] > rule.nodes[i - 1]))
      throw std::runtime_error("gauss_hermite: nodes not strictly increasing");
  for (double w : rule.weights)
    if (!(w > 0.0)) throw std::runtime_error("gauss_hermite: nonpositive weight");
  return rule;
}

PanelRule build_gauss_legendre(int order) {
  // Newton on P_n with the Chebyshev-like initial guess.
  PanelRule rule;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  const int half = (order + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= order; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = order * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[order - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[order - 1 - i] = w;
  }
  if (order % 2 == 1) rule.nodes[order / 2] = 0.0;
  return rule;
}

}  // namespace

const QuadratureRule& gauss_hermite(int order) {
  if (order < 2 || order > 200)
    throw std::invalid_argument("gauss_hermite: order must be in [2, 200]");
  static std::mutex mtx;
  static std::map<int, QuadratureRule> cache;
  std::lock_guard<std::mutex> lock(mtx);
  auto it = cache.find(order);
  if (it == cache.end()) it = cache.emplace(order, build_gauss_hermite(order)).first;
  return it->second;
}

const PanelRule& gauss_legendre(int order) {
  if (order < 2 || order > 200)
    throw std::invalid_argument("gauss_legendre: order must be in [2, 200]");
  static std::mutex mtx;
  static std::map<int, PanelRule> cache;
  std::lock_guard<std::mutex> lock(mtx);
  auto it = cache.find(order);
  if (it == cache.end()) it = cache.emplace(order, build_gauss_legendre(order)).first;
  return it->second;
}

}  // namespace rlr
