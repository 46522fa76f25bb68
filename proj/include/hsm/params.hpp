#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace hsm {

/// Problem parameters (n, p, k) together with the derived exponents.
///
/// n is the ambient dimension, p the gradient integrability exponent,
/// k the dimension of the weighted coordinate block y.  The space splits
/// as x = (y, z) with y in R^k, z in R^m, m = n - k.
struct Params {
  int n = 4;
  double p = 2.0;
  int k = 3;
  double p_star = 4.0;   // np/(n-p)
  double p1_star = 3.0;  // p(n-1)/(n-p)
  int m = 1;             // n - k
  // k == n is accepted (the inequality still holds) but the extremal
  // classification requires k <= n-1; flag it so reports can say so.
  bool classification_warning = false;

  Params() = default;

  Params(int n_, double p_, int k_) : n(n_), p(p_), k(k_) {
    if (n < 4) throw std::invalid_argument("Params: require n >= 4, got n=" + std::to_string(n));
    if (!(p > 1.0 && p < static_cast<double>(n)))
      throw std::invalid_argument("Params: require 1 < p < n, got p=" + std::to_string(p));
    if (k < 3 || k > n)
      throw std::invalid_argument("Params: require 3 <= k <= n, got k=" + std::to_string(k));
    classification_warning = (k == n);
    p_star = static_cast<double>(n) * p / (static_cast<double>(n) - p);
    p1_star = p * (static_cast<double>(n) - 1.0) / (static_cast<double>(n) - p);
    m = n - k;
  }

  /// Exponent of the extremal bracket: (n-p)/(2(p-1)).
  double bracket_exponent() const { return (n - p) / (2.0 * (p - 1.0)); }

  /// Dilation exponent (n-p)/p appearing in the lambda prefactor.
  double dilation_exponent() const { return (n - p) / p; }

  /// Sharp stability exponent gamma = max{2, p}.
  double gamma() const { return std::max(2.0, p); }
};

}  // namespace hsm
