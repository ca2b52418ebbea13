#pragma once

#include <string>
#include <string_view>

namespace rlr {

enum class Regularizer { none, l1, l2sq };

// Scalar penalty f~ applied coordinate-wise: none -> 0, l1 -> |x|,
// l2sq -> x^2/2. Prox is argmin_y (y-x)^2/(2t) + f~(y).
struct RegularizerSpec {
  Regularizer kind = Regularizer::l2sq;

  double value(double x) const;
  double prox(double x, double t) const;
  const char* name() const;
  static RegularizerSpec parse(std::string_view name);
};

double prox_l1(double x, double t);    // soft threshold sign(x)(|x|-t)+
double prox_l2sq(double x, double t);  // x/(1+t)

// Unique root z of z + t*rho'(z) = x, found by safeguarded Newton on the
// bracket [x-t, x]. Residual <= 1e-12*max(1,|x|). Throws std::runtime_error
// if the iteration fails to converge (a numerics bug, not an input error).
double prox_rho(double x, double t);
double prox_rho(double x, double t, double warm_start);

// d/dx prox_rho(x,t) = 1/(1 + t*rho''(prox_rho(x,t))), in (0, 1].
double prox_rho_derivative(double x, double t);
double prox_rho_derivative_at(double prox_value, double t);

// Attained minimum of the prox objective.
double moreau_envelope(const RegularizerSpec& f, double x, double t);
double moreau_envelope_rho(double x, double t);

}  // namespace rlr
