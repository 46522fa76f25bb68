#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "hsm/extremal.hpp"
#include "hsm/field.hpp"
#include "hsm/grid.hpp"

namespace hsm {

/// ||Dg||_{L^p} from nodal gradient samples.
inline double grad_norm_p(const Grid& grid, const GradField& g) {
  std::vector<double> integrand(grid.size());
  for (std::size_t q = 0; q < grid.size(); ++q)
    integrand[q] = std::pow(g.magnitude[q], grid.params.p);
  return std::pow(integrate(grid, integrand), 1.0 / grid.params.p);
}

/// ||Du||_{L^p}.  Extremal-tagged fields use their closed-form gradient so
/// that deficits of manifold points vanish to quadrature precision; generic
/// fields are differentiated by finite differences.
inline double grad_norm_p(const Grid& grid, const Field& u) {
  u.check_finite();
  if (u.kind == FieldKind::extremal && u.theta)
    return grad_norm_p(grid, extremal_grad_field(grid.params, grid, *u.theta));
  return grad_norm_p(grid, differentiate(u));
}

/// ||u||_{L^{p1*}(|y|^-1)}: the weighted norm on the right-hand side of the
/// sharp inequality.
inline double weighted_lpstar_norm(const Grid& grid, std::span<const double> values) {
  std::vector<double> integrand(grid.size());
  for (std::size_t q = 0; q < grid.size(); ++q)
    integrand[q] = std::pow(std::abs(values[q]), grid.params.p1_star) / grid.r_of(q);
  return std::pow(integrate(grid, integrand), 1.0 / grid.params.p1_star);
}

inline double weighted_lpstar_norm(const Grid& grid, const Field& u) {
  u.check_finite();
  return weighted_lpstar_norm(grid, u.values);
}

/// Weighted inner product <f,g>_* = int |y|^-1 |v|^{p1*-2} f g dx.
inline double weighted_inner(const Grid& grid, const Field& v_field, const Field& f,
                             const Field& g) {
  std::vector<double> integrand(grid.size());
  const double e = grid.params.p1_star - 2.0;
  for (std::size_t q = 0; q < grid.size(); ++q)
    integrand[q] = std::pow(std::abs(v_field.values[q]), e) * f.values[q] * g.values[q] / grid.r_of(q);
  return integrate(grid, integrand);
}

struct DeficitReport {
  double grad_norm = 0.0;      // ||Du||_{L^p}
  double weighted_norm = 0.0;  // ||u||_{L^{p1*}, |y|^-1}
  double sharp_S = 0.0;
  double deficit = 0.0;        // grad_norm / weighted_norm - sharp_S
};

inline DeficitReport deficit_from(const Grid& grid, std::span<const double> values,
                                  const GradField& grad, double sharp_S) {
  DeficitReport rep;
  rep.grad_norm = grad_norm_p(grid, grad);
  rep.weighted_norm = weighted_lpstar_norm(grid, values);
  rep.sharp_S = sharp_S;
  if (rep.weighted_norm == 0.0)
    throw std::invalid_argument("deficit: weighted norm is zero (u == 0?)");
  rep.deficit = rep.grad_norm / rep.weighted_norm - sharp_S;
  return rep;
}

/// Deficit delta(u) = ||Du||_p / ||u||_{p1*,|y|^-1} - S.  The sharp constant
/// is injected so every member of a study is compared against one S.
inline DeficitReport deficit(const Grid& grid, const Field& u, double sharp_S) {
  u.check_finite();
  if (u.kind == FieldKind::extremal && u.theta)
    return deficit_from(grid, u.values, extremal_grad_field(grid.params, grid, *u.theta), sharp_S);
  return deficit_from(grid, u.values, differentiate(u), sharp_S);
}

/// Relative projected distance raised to the sharp exponent:
///   (||D(u - v_theta)||_p / ||Du||_p)^gamma,  gamma = max{2, p}.
inline double stability_rhs(const Grid& grid, const GradField& du, const ExtremalParams& theta_min) {
  const Params& P = grid.params;
  GradField dv = extremal_grad_field(P, grid, theta_min);
  std::vector<double> integrand(grid.size()), denom(grid.size());
  for (std::size_t q = 0; q < grid.size(); ++q) {
    double s = (du.d_r[q] - dv.d_r[q]) * (du.d_r[q] - dv.d_r[q]);
    for (int a = 0; a < P.m; ++a) {
      const double d = du.d_z[static_cast<std::size_t>(a)][q] - dv.d_z[static_cast<std::size_t>(a)][q];
      s += d * d;
    }
    integrand[q] = std::pow(s, 0.5 * P.p);
    denom[q] = std::pow(du.magnitude[q], P.p);
  }
  const double dist = std::pow(integrate(grid, integrand), 1.0 / P.p);
  const double base = std::pow(integrate(grid, denom), 1.0 / P.p);
  if (base == 0.0) throw std::invalid_argument("stability_rhs: ||Du||_p is zero");
  return std::pow(dist / base, P.gamma());
}

inline double stability_rhs(const Grid& grid, const Field& u, const ExtremalParams& theta_min) {
  if (u.kind == FieldKind::extremal && u.theta)
    return stability_rhs(grid, extremal_grad_field(grid.params, grid, *u.theta), theta_min);
  return stability_rhs(grid, differentiate(u), theta_min);
}

}  // namespace hsm
