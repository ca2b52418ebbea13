#include "rlr/prox.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rlr/scalar_math.hpp"

namespace rlr {

double prox_l1(double x, double t) {
  const double a = std::abs(x) - t;
  return a > 0.0 ? std::copysign(a, x) : 0.0;
}

double prox_l2sq(double x, double t) { return x / (1.0 + t); }

double RegularizerSpec::value(double x) const {
  switch (kind) {
    case Regularizer::none: return 0.0;
    case Regularizer::l1: return std::abs(x);
    case Regularizer::l2sq: return 0.5 * x * x;
  }
  return 0.0;
}

double RegularizerSpec::prox(double x, double t) const {
  switch (kind) {
    case Regularizer::none: return x;
    case Regularizer::l1: return prox_l1(x, t);
    case Regularizer::l2sq: return prox_l2sq(x, t);
  }
  return x;
}

const char* RegularizerSpec::name() const {
  switch (kind) {
    case Regularizer::none: return "none";
    case Regularizer::l1: return "l1";
    case Regularizer::l2sq: return "l2sq";
  }
  return "?";
}

RegularizerSpec RegularizerSpec::parse(std::string_view name) {
  if (name == "none") return {Regularizer::none};
  if (name == "l1") return {Regularizer::l1};
  if (name == "l2sq") return {Regularizer::l2sq};
  throw std::invalid_argument("unknown regularizer: " + std::string(name));
}

double prox_rho(double x, double t, double warm_start) {
  if (!(t >= 0.0)) throw std::invalid_argument("prox_rho: t must be >= 0");
  if (t == 0.0) return x;
  // g(z) = z + t*rho'(z) - x is strictly increasing with g(x-t) < 0 < g(x).
  double lo = x - t, hi = x;
  double z = std::clamp(warm_start, lo, hi);
  const double tol = 1e-13 * std::max(1.0, std::abs(x));
  for (int it = 0; it < 200; ++it) {
    const double g = (z - x) + t * rho_prime(z);
    if (std::abs(g) <= tol) return z;
    if (g > 0.0) hi = z; else lo = z;
    const double step = g / (1.0 + t * rho_second(z));
    double znext = z - step;
    if (!(znext > lo) || !(znext < hi)) znext = 0.5 * (lo + hi);
    z = znext;
  }
  throw std::runtime_error("prox_rho: Newton failed to converge");
}

double prox_rho(double x, double t) {
  return prox_rho(x, t, x - t * rho_prime(x));
}

double prox_rho_derivative_at(double prox_value, double t) {
  return 1.0 / (1.0 + t * rho_second(prox_value));
}

double prox_rho_derivative(double x, double t) {
  if (t == 0.0) return 1.0;
  return prox_rho_derivative_at(prox_rho(x, t), t);
}

double moreau_envelope(const RegularizerSpec& f, double x, double t) {
  if (!(t > 0.0)) throw std::invalid_argument("moreau_envelope: t must be > 0");
  const double p = f.prox(x, t);
  const double d = x - p;
  return f.value(p) + d * d / (2.0 * t);
}

double moreau_envelope_rho(double x, double t) {
  if (!(t > 0.0)) throw std::invalid_argument("moreau_envelope_rho: t must be > 0");
  const double p = prox_rho(x, t);
  const double d = x - p;
  return rho(p) + d * d / (2.0 * t);
}

}  // namespace rlr
