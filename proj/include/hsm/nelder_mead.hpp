#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <random>
#include <vector>

namespace hsm {

struct NelderMeadOptions {
  int max_iterations = 4000;
  double simplex_tol = 1e-6;    // simplex diameter in scaled parameters
  double objective_tol = 1e-10; // relative objective stall
  int restarts = 3;
  double initial_step = 0.15;
  unsigned seed = 20250810;
};

struct NelderMeadResult {
  std::vector<double> x;
  double value = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
};

/// Derivative-free simplex descent with random restarts.  Convergence
/// requires both a small simplex diameter and an objective stall.
inline NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                                    const std::vector<double>& x0,
                                    const NelderMeadOptions& opt = {}) {
  const std::size_t dim = x0.size();
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  NelderMeadResult best;
  best.x = x0;
  best.value = f(x0);

  for (int restart = 0; restart <= opt.restarts; ++restart) {
    std::vector<double> start = best.x;
    if (restart > 0)
      for (double& c : start) c += opt.initial_step * gauss(rng);

    std::vector<std::vector<double>> simplex(dim + 1, start);
    std::vector<double> fx(dim + 1);
    for (std::size_t i = 0; i < dim; ++i) simplex[i + 1][i] += opt.initial_step;
    for (std::size_t i = 0; i <= dim; ++i) fx[i] = f(simplex[i]);

    int it = 0;
    bool converged = false;
    while (it < opt.max_iterations) {
      ++it;
      std::vector<std::size_t> order(dim + 1);
      for (std::size_t i = 0; i <= dim; ++i) order[i] = i;
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fx[a] < fx[b]; });
      const std::size_t lo = order[0], hi = order[dim], second = order[dim - 1];

      double diam = 0.0;
      for (std::size_t i = 1; i <= dim; ++i)
        for (std::size_t j = 0; j < dim; ++j)
          diam = std::max(diam, std::abs(simplex[order[i]][j] - simplex[lo][j]));
      const double stall = std::abs(fx[hi] - fx[lo]) /
                           std::max(1.0, std::max(std::abs(fx[hi]), std::abs(fx[lo])));
      if (diam < opt.simplex_tol && stall < opt.objective_tol) {
        converged = true;
        break;
      }

      std::vector<double> centroid(dim, 0.0);
      for (std::size_t i = 0; i <= dim; ++i) {
        if (i == hi) continue;
        for (std::size_t j = 0; j < dim; ++j) centroid[j] += simplex[i][j];
      }
      for (double& c : centroid) c /= static_cast<double>(dim);

      auto along = [&](double coef) {
        std::vector<double> x(dim);
        for (std::size_t j = 0; j < dim; ++j)
          x[j] = centroid[j] + coef * (simplex[hi][j] - centroid[j]);
        return x;
      };

      auto xr = along(-1.0);
      const double fr = f(xr);
      if (fr < fx[lo]) {
        auto xe = along(-2.0);
        const double fe = f(xe);
        if (fe < fr) { simplex[hi] = xe; fx[hi] = fe; }
        else         { simplex[hi] = xr; fx[hi] = fr; }
      } else if (fr < fx[second]) {
        simplex[hi] = xr; fx[hi] = fr;
      } else {
        auto xc = along(fr < fx[hi] ? -0.5 : 0.5);
        const double fc = f(xc);
        if (fc < std::min(fr, fx[hi])) { simplex[hi] = xc; fx[hi] = fc; }
        else {
          for (std::size_t i = 0; i <= dim; ++i) {
            if (i == lo) continue;
            for (std::size_t j = 0; j < dim; ++j)
              simplex[i][j] = simplex[lo][j] + 0.5 * (simplex[i][j] - simplex[lo][j]);
            fx[i] = f(simplex[i]);
          }
        }
      }
    }

    std::size_t lo = 0;
    for (std::size_t i = 1; i <= dim; ++i)
      if (fx[i] < fx[lo]) lo = i;
    if (fx[lo] < best.value) {
      best.value = fx[lo];
      best.x = simplex[lo];
    }
    best.iterations += it;
    best.converged = best.converged || converged;
  }
  return best;
}

}  // namespace hsm
