#include "rlr/expectation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rlr {

void PriorSpec::validate() const {
  if (!(kappa > 0.0)) throw std::invalid_argument("prior: kappa must be > 0");
  if (kind == Kind::sparse && !(sparsity > 0.0 && sparsity <= 1.0))
    throw std::invalid_argument("prior: sparsity must be in (0, 1]");
}

const char* PriorSpec::name() const {
  return kind == Kind::gaussian ? "gaussian" : "sparse";
}

PriorSpec PriorSpec::make_gaussian(double kappa) {
  PriorSpec p{Kind::gaussian, kappa, 1.0};
  p.validate();
  return p;
}

PriorSpec PriorSpec::make_sparse(double kappa, double s) {
  PriorSpec p{Kind::sparse, kappa, s};
  p.validate();
  return p;
}

double expect_z(const Integrand1& g, const QuadratureRule& rule) {
  std::vector<double> terms(rule.nodes.size());
  for (std::size_t i = 0; i < rule.nodes.size(); ++i)
    terms[i] = rule.weights[i] * g(rule.nodes[i]);
  return pairwise_sum(terms);
}

namespace {

constexpr double kTailSds = 13.5;    // Q(13.5) ~ 3e-42, beyond double noise here
constexpr int kPanelOrder = 16;
constexpr double kPanelPerScale = 1.5;  // panel length as a multiple of the local scale
constexpr int kMaxSubPanels = 4000;

}  // namespace

double expect_normal_panels(const Integrand1& g, double sd,
                            std::span<const double> kinks,
                            std::span<const Band> bands) {
  const double cut = kTailSds * sd;
  std::vector<double> edges{-cut, cut};
  for (double k : kinks)
    if (k > -cut && k < cut) edges.push_back(k);
  for (const Band& b : bands) {
    for (double e : {b.center - kTailSds * b.scale, b.center + kTailSds * b.scale})
      if (e > -cut && e < cut) edges.push_back(e);
  }
  std::sort(edges.begin(), edges.end());
  const double inv_sd = 1.0 / sd;

  const PanelRule& gl = gauss_legendre(kPanelOrder);
  std::vector<double> terms;
  terms.reserve(1024);
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    const double a = edges[i], b = edges[i + 1];
    if (!(b > a)) continue;
    double target = kPanelPerScale * sd;
    const double mid_iv = 0.5 * (a + b);
    for (const Band& band : bands)
      if (std::abs(mid_iv - band.center) <= kTailSds * band.scale)
        target = std::min(target, kPanelPerScale * band.scale);
    int nsub = static_cast<int>(std::ceil((b - a) / std::max(target, 1e-300)));
    nsub = std::clamp(nsub, 1, kMaxSubPanels);
    const double h = (b - a) / nsub;
    for (int s = 0; s < nsub; ++s) {
      const double lo = a + s * h;
      const double half = 0.5 * h;
      const double mid = lo + half;
      for (int q = 0; q < kPanelOrder; ++q) {
        const double x = mid + half * gl.nodes[q];
        terms.push_back(half * gl.weights[q] * g(x) * normal_pdf(x * inv_sd) * inv_sd);
      }
    }
  }
  return pairwise_sum(terms);
}

double expect_z_piecewise(const Integrand1& g, std::span<const double> kinks) {
  return expect_normal_panels(g, 1.0, kinks, {});
}

double expect_prior_z(const Integrand2& g, const PriorSpec& prior,
                      const QuadratureRule& rule) {
  prior.validate();
  auto inner = [&](double beta) {
    return expect_z([&](double z) { return g(beta, z); }, rule);
  };
  if (prior.kind == PriorSpec::Kind::gaussian) {
    std::vector<double> terms(rule.nodes.size());
    for (std::size_t i = 0; i < rule.nodes.size(); ++i)
      terms[i] = rule.weights[i] * inner(prior.kappa * rule.nodes[i]);
    return pairwise_sum(terms);
  }
  // Sparse: exact mixture of the point mass and the rescaled Gaussian branch.
  const double s = prior.sparsity;
  const double scale = prior.kappa / std::sqrt(s);
  std::vector<double> terms(rule.nodes.size());
  for (std::size_t i = 0; i < rule.nodes.size(); ++i)
    terms[i] = rule.weights[i] * inner(scale * rule.nodes[i]);
  return (1.0 - s) * inner(0.0) + s * pairwise_sum(terms);
}

double expect_prior_z(const Integrand2& g, const KinkStructure& ks,
                      const PriorSpec& prior, const QuadratureRule& rule) {
  prior.validate();
  (void)rule;  // the kink-aware route builds its own panels
  std::vector<double> zs;
  auto inner = [&](double beta) {
    zs.clear();
    if (ks.z_kinks) ks.z_kinks(beta, zs);
    return expect_z_piecewise([&](double z) { return g(beta, z); }, zs);
  };
  auto outer = [&](double sd) {
    return expect_normal_panels([&](double beta) { return inner(beta); }, sd, {},
                                ks.beta_bands);
  };
  if (prior.kind == PriorSpec::Kind::gaussian) return outer(prior.kappa);
  const double s = prior.sparsity;
  return (1.0 - s) * inner(0.0) + s * outer(prior.kappa / std::sqrt(s));
}

double expect_z1z2(const Integrand2& g, const QuadratureRule& rule) {
  const std::size_t n = rule.nodes.size();
  std::vector<double> rows(n), terms(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j)
      terms[j] = rule.weights[j] * g(rule.nodes[i], rule.nodes[j]);
    rows[i] = rule.weights[i] * pairwise_sum(terms);
  }
  return pairwise_sum(rows);
}

}  // namespace rlr
