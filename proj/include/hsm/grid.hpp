#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hsm/params.hpp"
#include "hsm/quadrature.hpp"

namespace hsm {

/// Tensor quadrature grid in mapped cylindrical coordinates (r, z_1..z_m).
///
/// The radial parameter t in (0,1) is mapped by r = L_r t/(1-t); each
/// translation parameter s in (-1,1) is mapped by z = L_z s/(1-s^2).
/// Gauss-Legendre nodes are interior, so no node sits at r = 0 and the
/// singular weight |y|^-1 is never evaluated at its singularity.
///
/// quad_weights fold the Gauss weights, the mapping Jacobians and the
/// cylindrical surface factor omega_{k-1} r^{k-1}, so that
///   sum_q quad_weights[q] f(r_q, z_q) ~ int_{R^n} f(|y|, z) dx
/// for cylindrically symmetric integrands.
///
/// Nodes are indexed row-major with r slowest:
///   q = (i_r * nz + i_{z,1}) * nz + i_{z,2} ...
struct Grid {
  Params params;
  int nr = 0;                        // radial node count
  int nz = 0;                        // node count per z axis (m axes)
  double L_r = 4.0;
  double L_z = 4.0;
  std::vector<double> t_nodes;       // radial parameter nodes in (0,1)
  std::vector<double> s_nodes;       // z parameter nodes in (-1,1), shared by all z axes
  std::vector<double> r_nodes;       // mapped radial coordinates, increasing, > 0
  std::vector<double> z_nodes;       // mapped z coordinates, increasing
  std::vector<double> w_r;           // 1D radial weight: gauss * Jacobian * omega_{k-1} r^{k-1}
  std::vector<double> w_z;           // 1D z-axis weight: gauss * Jacobian
  std::vector<double> quad_weights;  // tensor-product weights, size = size()

  std::size_t size() const { return quad_weights.size(); }

  std::size_t axis_count() const { return 1 + static_cast<std::size_t>(params.m); }

  // Decompose a flat index into (i_r, i_z[0..m-1]).
  int r_index(std::size_t q) const {
    std::size_t d = q;
    for (int a = 0; a < params.m; ++a) d /= static_cast<std::size_t>(nz);
    return static_cast<int>(d);
  }
  int z_index(std::size_t q, int axis) const {
    std::size_t d = q;
    for (int a = params.m - 1; a > axis; --a) d /= static_cast<std::size_t>(nz);
    return static_cast<int>(d % static_cast<std::size_t>(nz));
  }
  double r_of(std::size_t q) const { return r_nodes[static_cast<std::size_t>(r_index(q))]; }
  double z_of(std::size_t q, int axis) const {
    return z_nodes[static_cast<std::size_t>(z_index(q, axis))];
  }
};

/// Surface area of the unit sphere S^{k-1}: 2 pi^{k/2} / Gamma(k/2).
inline double unit_sphere_area(int k) {
  return 2.0 * std::pow(std::numbers::pi, 0.5 * k) / std::tgamma(0.5 * k);
}

inline Grid make_grid(const Params& params, int nodes_r, int nodes_z, double L_r = 4.0,
                      double L_z = 4.0, std::size_t node_cap = (1u << 22)) {
  if (nodes_r < 8 || (params.m > 0 && nodes_z < 8))
    throw std::invalid_argument("make_grid: need at least 8 nodes per axis");
  if (!(L_r > 0.0) || !(L_z > 0.0))
    throw std::invalid_argument("make_grid: map scales must be positive");

  Grid g;
  g.params = params;
  g.nr = nodes_r;
  g.nz = params.m > 0 ? nodes_z : 0;
  g.L_r = L_r;
  g.L_z = L_z;

  std::size_t total = static_cast<std::size_t>(nodes_r);
  for (int a = 0; a < params.m; ++a) total *= static_cast<std::size_t>(nodes_z);
  if (total > node_cap)
    throw std::invalid_argument("make_grid: tensor grid of " + std::to_string(total) +
                                " nodes exceeds cap " + std::to_string(node_cap));

  std::vector<double> gx, gw;
  gauss_legendre(nodes_r, gx, gw);
  g.t_nodes.resize(nodes_r);
  g.r_nodes.resize(nodes_r);
  g.w_r.resize(nodes_r);
  const double omega = unit_sphere_area(params.k);
  for (int i = 0; i < nodes_r; ++i) {
    const double t = 0.5 * (gx[i] + 1.0);      // (0,1)
    const double wt = 0.5 * gw[i];
    const double r = L_r * t / (1.0 - t);
    const double jac = L_r / ((1.0 - t) * (1.0 - t));
    g.t_nodes[i] = t;
    g.r_nodes[i] = r;
    g.w_r[i] = wt * jac * omega * std::pow(r, params.k - 1);
  }

  if (params.m > 0) {
    gauss_legendre(nodes_z, gx, gw);
    g.s_nodes.resize(nodes_z);
    g.z_nodes.resize(nodes_z);
    g.w_z.resize(nodes_z);
    for (int i = 0; i < nodes_z; ++i) {
      const double s = gx[i];
      const double z = L_z * s / (1.0 - s * s);
      const double jac = L_z * (1.0 + s * s) / ((1.0 - s * s) * (1.0 - s * s));
      g.s_nodes[i] = s;
      g.z_nodes[i] = z;
      g.w_z[i] = gw[i] * jac;
    }
  }

  g.quad_weights.resize(total);
  for (std::size_t q = 0; q < total; ++q) {
    double w = g.w_r[static_cast<std::size_t>(g.r_index(q))];
    for (int a = 0; a < params.m; ++a) w *= g.w_z[static_cast<std::size_t>(g.z_index(q, a))];
    g.quad_weights[q] = w;
  }
  return g;
}

/// Quadrature of a nodal integrand against the grid weights.
/// Throws if the integrand is non-finite, naming the offending node.
inline double integrate(const Grid& grid, std::span<const double> integrand) {
  if (integrand.size() != grid.size())
    throw std::invalid_argument("integrate: integrand size mismatch");
  std::vector<double> terms(grid.size());
  for (std::size_t q = 0; q < grid.size(); ++q) {
    if (!std::isfinite(integrand[q])) {
      std::string where = "r=" + std::to_string(grid.r_of(q));
      for (int a = 0; a < grid.params.m; ++a) where += ", z" + std::to_string(a + 1) + "=" + std::to_string(grid.z_of(q, a));
      throw std::invalid_argument("integrate: non-finite integrand at node " + std::to_string(q) +
                                  " (" + where + ")");
    }
    terms[q] = grid.quad_weights[q] * integrand[q];
  }
  return pairwise_sum(terms);
}

}  // namespace hsm
