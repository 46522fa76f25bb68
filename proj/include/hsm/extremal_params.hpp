#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

namespace hsm {

/// Manifold coordinates (a, lambda, z') of an extremal function.
struct ExtremalParams {
  double a = 1.0;
  double lambda = 1.0;
  std::vector<double> z_prime;  // length m

  ExtremalParams() = default;
  ExtremalParams(double a_, double lambda_, std::vector<double> zp)
      : a(a_), lambda(lambda_), z_prime(std::move(zp)) {
    validate();
  }

  void validate() const {
    if (a == 0.0 || !std::isfinite(a))
      throw std::invalid_argument("ExtremalParams: amplitude a must be nonzero and finite");
    if (!(lambda > 0.0) || !std::isfinite(lambda))
      throw std::invalid_argument("ExtremalParams: lambda must be positive and finite");
    for (double z : z_prime)
      if (!std::isfinite(z)) throw std::invalid_argument("ExtremalParams: z' must be finite");
  }
};

}  // namespace hsm
