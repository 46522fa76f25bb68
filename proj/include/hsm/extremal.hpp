#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "hsm/extremal_params.hpp"
#include "hsm/field.hpp"
#include "hsm/grid.hpp"
#include "hsm/params.hpp"

namespace hsm {

/// Extremal function
///   v_{a,lambda,z'}(x) = a lambda^{(n-p)/p} [(1+lambda|y|)^2 + |lambda z - z'|^2]^{-(n-p)/(2(p-1))}
/// evaluated at cylindrical coordinates (r, z).
inline double extremal_eval(const Params& params, const ExtremalParams& theta, double r,
                            std::span<const double> z) {
  if (r < 0.0) throw std::invalid_argument("extremal_eval: r must be >= 0");
  const double lr = 1.0 + theta.lambda * r;
  double bracket = lr * lr;
  for (std::size_t j = 0; j < z.size(); ++j) {
    const double d = theta.lambda * z[j] - (j < theta.z_prime.size() ? theta.z_prime[j] : 0.0);
    bracket += d * d;
  }
  return theta.a * std::pow(theta.lambda, params.dilation_exponent()) *
         std::pow(bracket, -params.bracket_exponent());
}

struct ExtremalGradient {
  double d_r = 0.0;
  std::vector<double> d_z;
  double magnitude = 0.0;
  // false at r = 0 where the radial direction y/|y| degenerates; the
  // magnitude is still the continuous limit.
  bool radial_direction_defined = true;
};

/// Closed-form gradient of the extremal in cylindrical components.
/// Radial component is proportional to (1+lambda r), z components to
/// (lambda z - z'), matching Dv = -((n-p)/(p-1)) W^{-(n+p-2)/(2(p-1))} x~
/// at (a, lambda, z') = (1, 1, 0).
inline ExtremalGradient extremal_gradient(const Params& params, const ExtremalParams& theta,
                                          double r, std::span<const double> z) {
  const double E = params.bracket_exponent();
  const double lam = theta.lambda;
  const double lr = 1.0 + lam * r;
  double bracket = lr * lr;
  std::vector<double> zdiff(z.size());
  for (std::size_t j = 0; j < z.size(); ++j) {
    zdiff[j] = lam * z[j] - (j < theta.z_prime.size() ? theta.z_prime[j] : 0.0);
    bracket += zdiff[j] * zdiff[j];
  }
  const double pref = theta.a * std::pow(lam, params.dilation_exponent());
  const double common = -2.0 * E * lam * pref * std::pow(bracket, -E - 1.0);
  ExtremalGradient g;
  g.d_r = common * lr;
  g.d_z.resize(z.size());
  for (std::size_t j = 0; j < z.size(); ++j) g.d_z[j] = common * zdiff[j];
  g.magnitude = 2.0 * E * lam * std::abs(pref) * std::pow(bracket, -E - 0.5);
  g.radial_direction_defined = (r > 0.0);
  return g;
}

/// Sample the extremal on a grid; the result carries the extremal tag.
inline Field extremal_field(const Params& params, const Grid& grid, const ExtremalParams& theta) {
  std::vector<double> vals(grid.size());
  std::vector<double> z(static_cast<std::size_t>(params.m));
  for (std::size_t q = 0; q < grid.size(); ++q) {
    for (int a = 0; a < params.m; ++a) z[static_cast<std::size_t>(a)] = grid.z_of(q, a);
    vals[q] = extremal_eval(params, theta, grid.r_of(q), z);
  }
  Field f = make_field(grid, std::move(vals), FieldKind::extremal);
  f.theta = theta;
  return f;
}

/// Closed-form nodal gradient of the extremal on a grid.
inline GradField extremal_grad_field(const Params& params, const Grid& grid,
                                     const ExtremalParams& theta) {
  GradField g;
  g.grid = &grid;
  g.d_r.resize(grid.size());
  g.d_z.assign(static_cast<std::size_t>(params.m), std::vector<double>(grid.size()));
  g.magnitude.resize(grid.size());
  std::vector<double> z(static_cast<std::size_t>(params.m));
  for (std::size_t q = 0; q < grid.size(); ++q) {
    for (int a = 0; a < params.m; ++a) z[static_cast<std::size_t>(a)] = grid.z_of(q, a);
    auto eg = extremal_gradient(params, theta, grid.r_of(q), z);
    g.d_r[q] = eg.d_r;
    for (int a = 0; a < params.m; ++a) g.d_z[static_cast<std::size_t>(a)][q] = eg.d_z[static_cast<std::size_t>(a)];
    g.magnitude[q] = eg.magnitude;
  }
  return g;
}

/// Derivative of the extremal family with respect to lambda, evaluated at
/// theta.  This is the genuine tangent direction of the dilation orbit and
/// an eigenfunction of the linearized operator; note it differs from the
/// combination (1+|y|) W^{-E-1} satisfying the radial identity
/// x~ . D phi = -((n-1)/(p-1)) phi by a multiple of v.
inline double extremal_dlambda(const Params& params, const ExtremalParams& theta, double r,
                               std::span<const double> z) {
  const double E = params.bracket_exponent();
  const double Q = params.dilation_exponent();
  const double lam = theta.lambda;
  const double lr = 1.0 + lam * r;
  double bracket = lr * lr;
  double dbracket = 2.0 * lr * r;  // d/dlambda
  for (std::size_t j = 0; j < z.size(); ++j) {
    const double d = lam * z[j] - (j < theta.z_prime.size() ? theta.z_prime[j] : 0.0);
    bracket += d * d;
    dbracket += 2.0 * d * z[j];
  }
  return theta.a * (Q * std::pow(lam, Q - 1.0) * std::pow(bracket, -E) -
                    E * std::pow(lam, Q) * std::pow(bracket, -E - 1.0) * dbracket);
}

/// Derivative with respect to z'_j; at (lambda, z') = (1, 0) this is
/// ((n-p)/(p-1)) W^{-(n-p)/(2(p-1))-1} z_j.
inline double extremal_dzprime(const Params& params, const ExtremalParams& theta, int j, double r,
                               std::span<const double> z) {
  const double E = params.bracket_exponent();
  const double lam = theta.lambda;
  const double lr = 1.0 + lam * r;
  double bracket = lr * lr;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double d = lam * z[i] - (i < theta.z_prime.size() ? theta.z_prime[i] : 0.0);
    bracket += d * d;
  }
  const double dj = lam * z[static_cast<std::size_t>(j)] -
                    (static_cast<std::size_t>(j) < theta.z_prime.size() ? theta.z_prime[static_cast<std::size_t>(j)] : 0.0);
  return 2.0 * E * theta.a * std::pow(lam, params.dilation_exponent()) *
         std::pow(bracket, -E - 1.0) * dj;
}

/// Tangent space basis [v, d_lambda v, d_{z'_1} v, ..., d_{z'_m} v] sampled
/// on a grid, with the Gram matrix in the weighted inner product
/// <f,g>_* = int |y|^-1 |v|^{p1*-2} f g dx.
struct TangentBasis {
  std::vector<Field> fields;  // m + 2 fields
  Eigen::MatrixXd gram;
};

inline TangentBasis tangent_basis(const Params& params, const Grid& grid,
                                  const ExtremalParams& theta) {
  theta.validate();
  const int nb = params.m + 2;
  TangentBasis tb;
  tb.fields.reserve(static_cast<std::size_t>(nb));

  Field v = extremal_field(params, grid, theta);
  std::vector<double> z(static_cast<std::size_t>(params.m));

  std::vector<double> dlam(grid.size());
  for (std::size_t q = 0; q < grid.size(); ++q) {
    for (int a = 0; a < params.m; ++a) z[static_cast<std::size_t>(a)] = grid.z_of(q, a);
    dlam[q] = extremal_dlambda(params, theta, grid.r_of(q), z);
  }

  tb.fields.push_back(v);
  {
    Field f = make_field(grid, std::move(dlam), FieldKind::tangent);
    f.theta = theta;
    f.tangent_index = 0;
    tb.fields.push_back(std::move(f));
  }
  for (int j = 0; j < params.m; ++j) {
    std::vector<double> dz(grid.size());
    for (std::size_t q = 0; q < grid.size(); ++q) {
      for (int a = 0; a < params.m; ++a) z[static_cast<std::size_t>(a)] = grid.z_of(q, a);
      dz[q] = extremal_dzprime(params, theta, j, grid.r_of(q), z);
    }
    Field f = make_field(grid, std::move(dz), FieldKind::tangent);
    f.theta = theta;
    f.tangent_index = 1 + j;
    tb.fields.push_back(std::move(f));
  }

  // Gram matrix in <.,.>_*
  std::vector<double> wstar(grid.size());
  for (std::size_t q = 0; q < grid.size(); ++q)
    wstar[q] = std::pow(std::abs(v.values[q]), params.p1_star - 2.0) / grid.r_of(q);
  tb.gram.resize(nb, nb);
  std::vector<double> prod(grid.size());
  for (int i = 0; i < nb; ++i)
    for (int j = i; j < nb; ++j) {
      for (std::size_t q = 0; q < grid.size(); ++q)
        prod[q] = wstar[q] * tb.fields[static_cast<std::size_t>(i)].values[q] *
                  tb.fields[static_cast<std::size_t>(j)].values[q];
      const double g = integrate(grid, prod);
      if (!std::isfinite(g)) throw std::runtime_error("tangent_basis: non-finite Gram entry");
      tb.gram(i, j) = g;
      tb.gram(j, i) = g;
    }
  return tb;
}

/// Sharp constant S = ||Dv||_{L^p} / ||v||_{L^{p1*}, |y|^-1} computed from
/// the closed-form extremal v_{1,1,0} by quadrature.
inline double sharp_constant(const Params& params, const Grid& grid) {
  ExtremalParams theta(1.0, 1.0, std::vector<double>(static_cast<std::size_t>(params.m), 0.0));
  Field v = extremal_field(params, grid, theta);
  GradField g = extremal_grad_field(params, grid, theta);
  std::vector<double> ig(grid.size()), iw(grid.size());
  for (std::size_t q = 0; q < grid.size(); ++q) {
    ig[q] = std::pow(g.magnitude[q], params.p);
    iw[q] = std::pow(std::abs(v.values[q]), params.p1_star) / grid.r_of(q);
  }
  const double gn = std::pow(integrate(grid, ig), 1.0 / params.p);
  const double wn = std::pow(integrate(grid, iw), 1.0 / params.p1_star);
  return gn / wn;
}

}  // namespace hsm
