#pragma once

#include <functional>
#include <span>
#include <vector>

#include "rlr/scalar_math.hpp"

namespace rlr {

// Distribution of the true signal entries. Both kinds have E[beta^2] = kappa^2;
// the sparse kind is a point mass at 0 with probability 1-s and
// N(0, kappa^2/s) otherwise. The point mass is handled exactly, never sampled.
struct PriorSpec {
  enum class Kind { gaussian, sparse };
  Kind kind = Kind::gaussian;
  double kappa = 1.0;
  double sparsity = 1.0;  // s, used by sparse only

  void validate() const;  // throws std::invalid_argument
  const char* name() const;
  static PriorSpec make_gaussian(double kappa);
  static PriorSpec make_sparse(double kappa, double s);
};

using Integrand1 = std::function<double(double)>;
using Integrand2 = std::function<double(double, double)>;
// Appends the z-locations at which z -> g(beta, z) has kinks.
using KinkLocator = std::function<void(double beta, std::vector<double>& zs)>;

// A region where a 1D integrand varies on a much finer scale than the
// integration measure (a smoothed kink): panels get refined to `scale` on
// [center - 13.5*scale, center + 13.5*scale].
struct Band {
  double center = 0.0;
  double scale = 1.0;
};

// E[g(Z)], Z ~ N(0,1), by the Gauss-Hermite rule.
double expect_z(const Integrand1& g, const QuadratureRule& rule);

// E[g(B)] for B ~ N(0, sd^2) by composite Gauss-Legendre panels against the
// normal density, split exactly at each kink and refined inside each band.
// Plain Gauss-Hermite stalls near 1e-5 on kinked or boundary-layer
// integrands; the panels restore the accuracy the cross-route checks need.
double expect_normal_panels(const Integrand1& g, double sd,
                            std::span<const double> kinks,
                            std::span<const Band> bands);

// Convenience: standard normal, kinks only.
double expect_z_piecewise(const Integrand1& g, std::span<const double> kinks);

// Kink geometry of a two-variable integrand g(beta, z): exact kink locations
// along z for fixed beta, plus the beta-bands where the z-averaged integrand
// transitions sharply (width ~ the z->argument scale ratio).
struct KinkStructure {
  KinkLocator z_kinks;
  std::vector<Band> beta_bands;
};

// E[g(beta, Z)] over beta ~ prior and an independent standard normal Z.
double expect_prior_z(const Integrand2& g, const PriorSpec& prior,
                      const QuadratureRule& rule);
double expect_prior_z(const Integrand2& g, const KinkStructure& ks,
                      const PriorSpec& prior, const QuadratureRule& rule);

// E[g(Z1, Z2)] over independent standard normals, tensor Gauss-Hermite.
double expect_z1z2(const Integrand2& g, const QuadratureRule& rule);

}  // namespace rlr
