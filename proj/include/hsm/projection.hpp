#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hsm/extremal.hpp"
#include "hsm/field.hpp"
#include "hsm/functionals.hpp"
#include "hsm/grid.hpp"
#include "hsm/nelder_mead.hpp"

namespace hsm {

enum class ProjectionMethod { distance, functional };

struct ProjectionResult {
  ExtremalParams theta;
  double distance = 0.0;                // ||D(u - v_theta)||_p
  std::vector<double> ortho_residuals;  // normalized cosines against the tangent basis
  ProjectionMethod method = ProjectionMethod::distance;
  int iterations = 0;
  bool converged = false;
  double objective = 0.0;
};

struct ProjectionOptions {
  NelderMeadOptions nm;
  double residual_tol = 1e-6;  // functional method declares convergence only below this
};

namespace detail {

inline ExtremalParams unpack_theta(std::span<const double> x, int m) {
  ExtremalParams th;
  th.a = x[0];
  th.lambda = std::exp(x[1]);
  th.z_prime.assign(x.begin() + 2, x.begin() + 2 + m);
  return th;
}

inline std::vector<double> pack_theta(const ExtremalParams& th) {
  std::vector<double> x;
  x.reserve(2 + th.z_prime.size());
  x.push_back(th.a);
  x.push_back(std::log(th.lambda));
  x.insert(x.end(), th.z_prime.begin(), th.z_prime.end());
  return x;
}

inline double distance_objective(const Grid& grid, const GradField& du, const ExtremalParams& th) {
  if (th.a == 0.0) return std::numeric_limits<double>::infinity();
  const Params& P = grid.params;
  GradField dv = extremal_grad_field(P, grid, th);
  std::vector<double> integrand(grid.size());
  for (std::size_t q = 0; q < grid.size(); ++q) {
    double s = (du.d_r[q] - dv.d_r[q]) * (du.d_r[q] - dv.d_r[q]);
    for (int a = 0; a < P.m; ++a) {
      const double d = du.d_z[static_cast<std::size_t>(a)][q] - dv.d_z[static_cast<std::size_t>(a)][q];
      s += d * d;
    }
    integrand[q] = std::pow(s, 0.5 * P.p);
  }
  return integrate(grid, integrand);
}

inline double functional_objective(const Grid& grid, std::span<const double> u,
                                   const ExtremalParams& th) {
  if (th.a == 0.0) return std::numeric_limits<double>::infinity();
  const Params& P = grid.params;
  const double p1 = P.p1_star;
  std::vector<double> integrand(grid.size());
  std::vector<double> z(static_cast<std::size_t>(P.m));
  for (std::size_t q = 0; q < grid.size(); ++q) {
    for (int a = 0; a < P.m; ++a) z[static_cast<std::size_t>(a)] = grid.z_of(q, a);
    const double v = extremal_eval(P, th, grid.r_of(q), z);
    const double av = std::abs(v);
    integrand[q] = (std::pow(av, p1) / p1 -
                    std::pow(av, p1 - 2.0) * v * u[q] / (p1 - 1.0)) /
                   grid.r_of(q);
  }
  return integrate(grid, integrand);
}

}  // namespace detail

/// Normalized orthogonality cosines of u - v_theta against the tangent
/// basis: <u - v_theta, w_j>_* / (||u - v_theta||_* ||w_j||_*).
/// Returns all zeros when u coincides with v_theta on the nodes.
inline std::vector<double> orthogonality_residual(const Grid& grid, const Field& u,
                                                  const ExtremalParams& theta) {
  const Params& P = grid.params;
  TangentBasis tb = tangent_basis(P, grid, theta);
  const Field& v = tb.fields[0];
  std::vector<double> diff(grid.size());
  double max_abs = 0.0;
  for (std::size_t q = 0; q < grid.size(); ++q) {
    diff[q] = u.values[q] - v.values[q];
    max_abs = std::max(max_abs, std::abs(diff[q]));
  }
  const int nb = P.m + 2;
  if (max_abs == 0.0) return std::vector<double>(static_cast<std::size_t>(nb), 0.0);

  std::vector<double> wstar(grid.size());
  for (std::size_t q = 0; q < grid.size(); ++q)
    wstar[q] = std::pow(std::abs(v.values[q]), P.p1_star - 2.0) / grid.r_of(q);

  std::vector<double> tmp(grid.size());
  for (std::size_t q = 0; q < grid.size(); ++q) tmp[q] = wstar[q] * diff[q] * diff[q];
  const double diff_norm = std::sqrt(integrate(grid, tmp));

  std::vector<double> res(static_cast<std::size_t>(nb));
  for (int j = 0; j < nb; ++j) {
    for (std::size_t q = 0; q < grid.size(); ++q)
      tmp[q] = wstar[q] * diff[q] * tb.fields[static_cast<std::size_t>(j)].values[q];
    const double inner = integrate(grid, tmp);
    const double wnorm = std::sqrt(tb.gram(j, j));
    res[static_cast<std::size_t>(j)] = (diff_norm > 0.0 && wnorm > 0.0)
                                           ? inner / (diff_norm * wnorm)
                                           : 0.0;
  }
  return res;
}

namespace detail {

inline ProjectionResult project_impl(const Grid& grid, const Field& u, const GradField& du,
                                     const ExtremalParams& theta0, ProjectionMethod method,
                                     const ProjectionOptions& opt) {
  const Params& P = grid.params;
  if (static_cast<int>(theta0.z_prime.size()) != P.m)
    throw std::invalid_argument("projection: theta0.z_prime must have length m = " +
                                std::to_string(P.m));
  auto objective = [&](const std::vector<double>& x) {
    ExtremalParams th = unpack_theta(x, P.m);
    return method == ProjectionMethod::distance ? distance_objective(grid, du, th)
                                                : functional_objective(grid, u.values, th);
  };
  NelderMeadResult nm = nelder_mead(objective, pack_theta(theta0), opt.nm);

  ProjectionResult out;
  out.method = method;
  out.theta = unpack_theta(nm.x, P.m);
  out.iterations = nm.iterations;
  out.converged = nm.converged;
  out.objective = nm.value;
  out.distance = std::pow(distance_objective(grid, du, out.theta), 1.0 / P.p);
  out.ortho_residuals = orthogonality_residual(grid, u, out.theta);
  if (method == ProjectionMethod::functional) {
    for (double r : out.ortho_residuals)
      if (std::abs(r) > opt.residual_tol) out.converged = false;
  }
  return out;
}

}  // namespace detail

/// Nearest extremal in D^{1,p}: local minimizer of ||D(u - v_theta)||_p^p
/// over (a, log lambda, z') by simplex descent with restarts.
inline ProjectionResult nearest_extremal(const Grid& grid, const Field& u,
                                         const ExtremalParams& theta0,
                                         const ProjectionOptions& opt = {}) {
  GradField du = (u.kind == FieldKind::extremal && u.theta)
                     ? extremal_grad_field(grid.params, grid, *u.theta)
                     : differentiate(u);
  return detail::project_impl(grid, u, du, theta0, ProjectionMethod::distance, opt);
}

inline ProjectionResult nearest_extremal(const Grid& grid, const Field& u, const GradField& du,
                                         const ExtremalParams& theta0,
                                         const ProjectionOptions& opt = {}) {
  return detail::project_impl(grid, u, du, theta0, ProjectionMethod::distance, opt);
}

/// Orthogonality-selecting projection of Lemma-4.2 type: minimizes
///   F_u[v_theta] = (1/p1*) int |y|^-1 |v|^{p1*} - (1/(p1*-1)) int |y|^-1 |v|^{p1*-2} v u
/// whose stationarity over the manifold is exactly orthogonality of u - v
/// to the tangent space.
inline ProjectionResult orthogonal_select(const Grid& grid, const Field& u,
                                          const ExtremalParams& theta0,
                                          const ProjectionOptions& opt = {}) {
  GradField du = (u.kind == FieldKind::extremal && u.theta)
                     ? extremal_grad_field(grid.params, grid, *u.theta)
                     : differentiate(u);
  return detail::project_impl(grid, u, du, theta0, ProjectionMethod::functional, opt);
}

inline ProjectionResult orthogonal_select(const Grid& grid, const Field& u, const GradField& du,
                                          const ExtremalParams& theta0,
                                          const ProjectionOptions& opt = {}) {
  return detail::project_impl(grid, u, du, theta0, ProjectionMethod::functional, opt);
}

}  // namespace hsm
