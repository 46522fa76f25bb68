#pragma once

// Test-only oracles, kept independent of the library's quadrature and
// differentiation paths: adaptive Gauss-Kronrod integration on the reduced
// (r, z) integrands, Richardson extrapolated scalar derivatives, and a dense
// parameter grid search used to bracket optimizer results.

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

namespace oracle {

namespace detail {

// Gauss 7 / Kronrod 15 nodes and weights on [-1, 1].
inline constexpr std::array<double, 15> kx = {
    -0.991455371120813, -0.949107912342759, -0.864864423359769, -0.741531185599394,
    -0.586087235467691, -0.405845151377397, -0.207784955007898, 0.0,
    0.207784955007898,  0.405845151377397,  0.586087235467691,  0.741531185599394,
    0.864864423359769,  0.949107912342759,  0.991455371120813};
inline constexpr std::array<double, 15> kw = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728,
    0.204432940075298, 0.190350578064785, 0.169004726639267, 0.140653259715525,
    0.104790010322250, 0.063092092629979, 0.022935322010529};
inline constexpr std::array<double, 7> gw = {
    0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469,
    0.381830050505119, 0.279705391489277, 0.129484966168870};

inline void gk15(const std::function<double(double)>& f, double a, double b, double& result,
                 double& err) {
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  double k = 0.0, g = 0.0;
  for (int i = 0; i < 15; ++i) {
    const double v = f(mid + half * kx[static_cast<std::size_t>(i)]);
    k += kw[static_cast<std::size_t>(i)] * v;
    if (i % 2 == 1) g += gw[static_cast<std::size_t>(i / 2)] * v;
  }
  result = k * half;
  err = std::abs((k - g) * half);
}

inline double adapt(const std::function<double(double)>& f, double a, double b, double tol,
                    int depth) {
  double res, err;
  gk15(f, a, b, res, err);
  if (err <= tol + 1e-14 * std::abs(res) || depth > 20) return res;
  const double mid = 0.5 * (a + b);
  return adapt(f, a, mid, 0.5 * tol, depth + 1) + adapt(f, mid, b, 0.5 * tol, depth + 1);
}

}  // namespace detail

/// Adaptive 1D integral of f over [a, b].
inline double integrate_1d(const std::function<double(double)>& f, double a, double b,
                           double tol = 1e-11) {
  return detail::adapt(f, a, b, tol, 0);
}

/// Adaptive 2D integral of f(r, z) over [r0, r1] x [z0, z1] (nested).
inline double integrate_2d(const std::function<double(double, double)>& f, double r0, double r1,
                           double z0, double z1, double tol = 1e-10) {
  auto outer = [&](double r) {
    return integrate_1d([&, r](double z) { return f(r, z); }, z0, z1,
                        std::max(tol * 1e-2, 1e-13));
  };
  return detail::adapt(outer, r0, r1, std::max(tol, 1e-12), 0);
}

/// Richardson-extrapolated central difference of a scalar function.
inline double derivative(const std::function<double(double)>& f, double x, double h = 1e-3) {
  auto cd = [&](double hh) { return (f(x + hh) - f(x - hh)) / (2.0 * hh); };
  const double d1 = cd(h), d2 = cd(0.5 * h), d3 = cd(0.25 * h);
  const double r1 = (4.0 * d2 - d1) / 3.0;
  const double r2 = (4.0 * d3 - d2) / 3.0;
  return (16.0 * r2 - r1) / 15.0;
}

/// Dense grid search over a box; returns the best point and value.
template <typename F>
std::pair<std::vector<double>, double> grid_search(F&& f, const std::vector<double>& lo,
                                                   const std::vector<double>& hi, int per_axis) {
  const std::size_t dim = lo.size();
  std::vector<int> idx(dim, 0);
  std::vector<double> x(dim), best_x;
  double best = std::numeric_limits<double>::infinity();
  while (true) {
    for (std::size_t d = 0; d < dim; ++d)
      x[d] = lo[d] + (hi[d] - lo[d]) * idx[d] / (per_axis - 1);
    const double v = f(x);
    if (v < best) {
      best = v;
      best_x = x;
    }
    std::size_t d = 0;
    while (d < dim && ++idx[d] == per_axis) idx[d++] = 0;
    if (d == dim) break;
  }
  return {best_x, best};
}

}  // namespace oracle
