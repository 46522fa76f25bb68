#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "hsm/grid.hpp"       // unit_sphere_area
#include "hsm/quadrature.hpp"

namespace hsm {

/// Outcome of one randomized inequality check.
struct IneqCheckReport {
  std::string inequality_id;
  long samples = 0;
  long violations = 0;       // must be 0 on pass
  double worst_margin = 0.0; // min of RHS - LHS (or RHS/LHS - 1)
  double constant_found = 0.0;
  unsigned seed = 0;
  long skipped = 0;            // degenerate samples skipped per the lemma
  double branch_difference = 0.0;  // p = 2 w-branch agreement (FZ 2.1 only)
};

namespace detail {

// Implementation-independent uniform doubles so reports are reproducible
// across standard libraries.
struct UniformRng {
  std::mt19937_64 eng;
  explicit UniformRng(unsigned seed) : eng(seed) {}
  double unit() { return static_cast<double>(eng() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }
  double log_uniform(double lo, double hi) {
    return std::exp(uniform(std::log(lo), std::log(hi)));
  }
  double sign() { return unit() < 0.5 ? -1.0 : 1.0; }
  // uniform direction on S^2 (the 3-dimensional proxy space)
  void direction3(double out[3]) {
    const double u = 2.0 * unit() - 1.0;
    const double phi = 2.0 * 3.14159265358979323846 * unit();
    const double s = std::sqrt(std::max(0.0, 1.0 - u * u));
    out[0] = s * std::cos(phi);
    out[1] = s * std::sin(phi);
    out[2] = u;
  }
};

inline double dot3(const double a[3], const double b[3]) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}
inline double norm3(const double a[3]) { return std::sqrt(dot3(a, a)); }

}  // namespace detail

/// Pointwise vector inequality of Figalli-Zhang type (Lemma B.2 shape):
/// for kappa > 0 there is c0(p, kappa) > 0 with
///   |x1+x2|^p >= |x1|^p + p|x1|^{p-2} x1.x2
///                + (1-kappa)/2 * ( p|x1|^{p-2}|x2|^2
///                                  + p(p-2)|w|^{p-2}(|x1|-|x1+x2|)^2 )
///                + c0 * min{|x2|^p, |x1|^{p-2}|x2|^2}     (p < 2; for p >= 2
///                  the last term is c0 |x2|^p).
/// Samples vectors in dimension 3 with log-uniform magnitudes and reports
/// the largest c0 feasible on the whole sample.
inline IneqCheckReport check_fz21(double p, double kappa, long sample_count, unsigned seed) {
  if (!(p > 1.0)) throw std::invalid_argument("check_fz21: need p > 1");
  if (!(kappa > 0.0)) throw std::invalid_argument("check_fz21: need kappa > 0");
  detail::UniformRng rng(seed);
  IneqCheckReport rep;
  rep.inequality_id = "fz21";
  rep.samples = sample_count;
  rep.seed = seed;
  rep.worst_margin = std::numeric_limits<double>::infinity();
  double c0 = std::numeric_limits<double>::infinity();
  double branch_diff = 0.0;

  // |w|^{p-2} for the two displayed branches; at p = 2 both reduce to the
  // same expression and the p(p-2) factor kills the term anyway.
  auto wpow_lt2 = [&](double n1, double n12) {
    const double ratio = n12 / ((2.0 - p) * n12 + (p - 1.0) * n1);
    return ratio * std::pow(n1, p - 2.0);
  };
  auto wpow_ge2 = [&](double n1, double n12) {
    return (n12 / n1) * std::pow(n12, p - 2.0);
  };

  for (long s = 0; s < sample_count; ++s) {
    double d1[3], d2[3], x1[3], x2[3], x12[3];
    rng.direction3(d1);
    rng.direction3(d2);
    const double m1 = rng.log_uniform(1e-3, 1e3);
    const double m2 = rng.log_uniform(1e-3, 1e3);
    for (int i = 0; i < 3; ++i) {
      x1[i] = m1 * d1[i];
      x2[i] = m2 * d2[i];
      x12[i] = x1[i] + x2[i];
    }
    const double n1 = detail::norm3(x1);
    const double n2 = detail::norm3(x2);
    const double n12 = detail::norm3(x12);
    if (n1 == 0.0) { ++rep.skipped; continue; }

    const double lhs = std::pow(n12, p);
    double wterm;
    if (p == 2.0) {
      wterm = 0.0;
      if (n12 > 0.0) {
        const double a = wpow_lt2(n1, n12), b = wpow_ge2(n1, n12);
        branch_diff = std::max(branch_diff, std::abs(a - b) / std::max(a, b));
      }
    } else {
      double wp;
      if (p < 2.0)
        wp = n1 < n12 ? wpow_lt2(n1, n12) : std::pow(n1, p - 2.0);
      else
        wp = n1 < n12 ? std::pow(n1, p - 2.0) : wpow_ge2(n1, n12);
      wterm = p * (p - 2.0) * wp * (n1 - n12) * (n1 - n12);
    }
    const double base = std::pow(n1, p) + p * std::pow(n1, p - 2.0) * detail::dot3(x1, x2) +
                        0.5 * (1.0 - kappa) * (p * std::pow(n1, p - 2.0) * n2 * n2 + wterm);
    const double minterm = p < 2.0
                               ? std::min(std::pow(n2, p), std::pow(n1, p - 2.0) * n2 * n2)
                               : std::pow(n2, p);
    const double slack = lhs - base;
    const double scale = std::max({std::abs(lhs), std::abs(base), 1e-300});
    rep.worst_margin = std::min(rep.worst_margin, slack / scale);
    if (slack < -1e-10 * scale) {
      ++rep.violations;
      continue;
    }
    if (minterm > 0.0) c0 = std::min(c0, std::max(0.0, slack) / minterm);
  }
  rep.constant_found = c0;
  rep.branch_difference = branch_diff;
  return rep;
}

/// Scalar Taylor-domination inequality (Lemma B.4 shape).  Case (i) applies
/// for p1* <= 2, case (ii) for p1* > 2; the smallest feasible C1 over the
/// sample is found by bisection.
inline IneqCheckReport check_fz24(double p1_star, double kappa, long sample_count, unsigned seed) {
  if (!(p1_star > 1.0)) throw std::invalid_argument("check_fz24: need p1* > 1");
  if (!(kappa > 0.0)) throw std::invalid_argument("check_fz24: need kappa > 0");
  detail::UniformRng rng(seed);
  IneqCheckReport rep;
  rep.inequality_id = "fz24";
  rep.samples = sample_count;
  rep.seed = seed;
  const bool case_i = p1_star <= 2.0;
  const double coef = 0.5 * p1_star * (p1_star - 1.0) + kappa;

  std::vector<double> as, bs;
  as.reserve(static_cast<std::size_t>(sample_count));
  bs.reserve(static_cast<std::size_t>(sample_count));
  for (long s = 0; s < sample_count; ++s) {
    const double a = rng.sign() * rng.log_uniform(1e-3, 1e3);
    const double b = rng.sign() * rng.log_uniform(1e-3, 1e3);
    if (a == 0.0 && b == 0.0) { ++rep.skipped; continue; }
    as.push_back(a);
    bs.push_back(b);
  }

  auto rhs_minus_lhs = [&](double a, double b, double C1) {
    const double aa = std::abs(a), ab = std::abs(b);
    const double lhs = std::pow(std::abs(a + b), p1_star);
    const double lin = p1_star * (aa > 0.0 ? std::pow(aa, p1_star - 1.0) * (a > 0 ? 1.0 : -1.0) : 0.0) * b;
    double rhs;
    if (case_i)
      rhs = std::pow(aa, p1_star) + lin +
            coef * std::pow(aa + C1 * ab, p1_star) * b * b / (a * a + b * b);
    else
      rhs = std::pow(aa, p1_star) + lin + coef * std::pow(aa, p1_star - 2.0) * b * b +
            C1 * std::pow(ab, p1_star);
    return rhs - lhs;
  };
  auto feasible = [&](double C1) {
    for (std::size_t i = 0; i < as.size(); ++i) {
      const double m = rhs_minus_lhs(as[i], bs[i], C1);
      const double scale = std::max(std::pow(std::abs(as[i]) + std::abs(bs[i]), p1_star), 1e-300);
      if (m < -1e-9 * scale) return false;
    }
    return true;
  };

  double hi = 1.0;
  while (!feasible(hi) && hi < 1e12) hi *= 2.0;
  if (!feasible(hi)) {
    rep.violations = 1;
    rep.constant_found = std::numeric_limits<double>::infinity();
    return rep;
  }
  double lo = 0.0;
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    (feasible(mid) ? hi : lo) = mid;
  }
  rep.constant_found = hi;
  rep.worst_margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < as.size(); ++i) {
    const double m = rhs_minus_lhs(as[i], bs[i], hi);
    const double scale = std::max(std::pow(std::abs(as[i]) + std::abs(bs[i]), p1_star), 1e-300);
    rep.worst_margin = std::min(rep.worst_margin, m / scale);
    if (m < -1e-9 * scale) ++rep.violations;
  }
  return rep;
}

namespace detail {

// A radial test function built from disjoint smooth bumps, each carrying its
// own Gauss-Legendre panel so the 1D integrals are quadrature-exact.
struct RadialTestFunction {
  struct Segment {
    double center, width, amplitude;
    double lo() const { return center - width; }
    double hi() const { return center + width; }
  };
  std::vector<Segment> segments;

  double value(double r) const {
    double s = 0.0;
    for (const auto& seg : segments) {
      const double x = (r - seg.center) / seg.width;
      if (std::abs(x) < 1.0) s += seg.amplitude * std::exp(-1.0 / (1.0 - x * x));
    }
    return s;
  }
  double derivative(double r) const {
    double s = 0.0;
    for (const auto& seg : segments) {
      const double x = (r - seg.center) / seg.width;
      if (std::abs(x) < 1.0) {
        const double d = 1.0 - x * x;
        s += seg.amplitude * std::exp(-1.0 / d) * (-2.0 * x / (d * d)) / seg.width;
      }
    }
    return s;
  }
};

inline RadialTestFunction random_radial_function(UniformRng& rng) {
  RadialTestFunction f;
  const int nb = 1 + static_cast<int>(rng.unit() * 3.0);
  std::vector<double> centers;
  for (int i = 0; i < nb; ++i) centers.push_back(rng.log_uniform(0.05, 8.0));
  std::sort(centers.begin(), centers.end());
  for (int i = 0; i < nb; ++i) {
    double w = centers[static_cast<std::size_t>(i)] * rng.uniform(0.3, 0.8);
    // shrink widths so supports stay disjoint and positive
    if (i > 0) w = std::min(w, 0.45 * (centers[static_cast<std::size_t>(i)] - centers[static_cast<std::size_t>(i - 1)]));
    if (i + 1 < nb) w = std::min(w, 0.45 * (centers[static_cast<std::size_t>(i + 1)] - centers[static_cast<std::size_t>(i)]));
    if (w <= 0.0) continue;
    f.segments.push_back({centers[static_cast<std::size_t>(i)], w, rng.sign() * rng.uniform(0.2, 1.0)});
  }
  if (f.segments.empty()) f.segments.push_back({1.0, 0.4, 1.0});
  return f;
}

// integral over the union of segment supports of g(r), panelwise GL
inline double radial_integral(const RadialTestFunction& f, int nodes_per_segment,
                              const std::function<double(double)>& g) {
  static thread_local std::vector<double> gx, gw;
  static thread_local int cached = 0;
  if (cached != nodes_per_segment) {
    gauss_legendre(nodes_per_segment, gx, gw);
    cached = nodes_per_segment;
  }
  double total = 0.0;
  for (const auto& seg : f.segments) {
    const double mid = 0.5 * (seg.hi() + seg.lo());
    const double half = 0.5 * (seg.hi() - seg.lo());
    double acc = 0.0;
    for (std::size_t i = 0; i < gx.size(); ++i) acc += gw[i] * g(mid + half * gx[i]);
    total += half * acc;
  }
  return total;
}

}  // namespace detail

/// Hardy-Sobolev inequality on radial test functions (Lemma B.1(i) shape):
///   int_{|x|>R} |x|^{s-q} |phi|^q <= C int |x|^s |Dphi|^q.
/// Reports the smallest feasible C over the sample.
inline IneqCheckReport check_hardy_sobolev(int n, double q, double s, double R, long test_count,
                                           unsigned seed) {
  if (q < 1.0 || !(s > q - n) || R < 0.0)
    throw std::invalid_argument("check_hardy_sobolev: require q >= 1, s > q - n, R >= 0");
  detail::UniformRng rng(seed);
  IneqCheckReport rep;
  rep.inequality_id = "hardy_sobolev";
  rep.samples = test_count;
  rep.seed = seed;
  rep.worst_margin = std::numeric_limits<double>::infinity();
  const double sigma = unit_sphere_area(n);
  double cmax = 0.0;
  for (long t = 0; t < test_count; ++t) {
    auto f = detail::random_radial_function(rng);
    const double lhs = sigma * detail::radial_integral(f, 160, [&](double r) {
      if (r <= R) return 0.0;
      return std::pow(r, n - 1.0 + s - q) * std::pow(std::abs(f.value(r)), q);
    });
    const double rhs = sigma * detail::radial_integral(f, 160, [&](double r) {
      return std::pow(r, n - 1.0 + s) * std::pow(std::abs(f.derivative(r)), q);
    });
    if (!(rhs > 0.0)) { ++rep.skipped; continue; }
    cmax = std::max(cmax, lhs / rhs);
    rep.worst_margin = std::min(rep.worst_margin, rhs > 0.0 ? rhs : 0.0);
  }
  rep.constant_found = cmax;
  // re-verify: no sample may exceed the found constant
  detail::UniformRng rng2(seed);
  for (long t = 0; t < test_count; ++t) {
    auto f = detail::random_radial_function(rng2);
    const double lhs = sigma * detail::radial_integral(f, 160, [&](double r) {
      if (r <= R) return 0.0;
      return std::pow(r, n - 1.0 + s - q) * std::pow(std::abs(f.value(r)), q);
    });
    const double rhs = sigma * detail::radial_integral(f, 160, [&](double r) {
      return std::pow(r, n - 1.0 + s) * std::pow(std::abs(f.derivative(r)), q);
    });
    if (rhs > 0.0 && lhs > cmax * rhs * (1.0 + 1e-12)) ++rep.violations;
  }
  return rep;
}

/// Caffarelli-Kohn-Nirenberg inequality on radial test functions
/// (Lemma B.1(ii) shape): |||x|^beta phi||_{L^r} <= C |||x|^alpha Dphi||_{L^q}
/// under the balance 1/r + beta/n = 1/q + (alpha-1)/n > 0.
inline IneqCheckReport check_ckn(int n, double r_exp, double q, double alpha, double beta,
                                 long test_count, unsigned seed) {
  if (r_exp < 1.0 || q < 1.0)
    throw std::invalid_argument("check_ckn: require r, q >= 1");
  const double balance = 1.0 / r_exp + beta / n - 1.0 / q - (alpha - 1.0) / n;
  if (std::abs(balance) > 1e-12)
    throw std::invalid_argument("check_ckn: balance violated by " + std::to_string(balance));
  if (!(1.0 / r_exp + beta / n > 0.0))
    throw std::invalid_argument("check_ckn: balance value must be positive");
  detail::UniformRng rng(seed);
  IneqCheckReport rep;
  rep.inequality_id = "ckn";
  rep.samples = test_count;
  rep.seed = seed;
  const double sigma = unit_sphere_area(n);
  double cmax = 0.0;
  for (long t = 0; t < test_count; ++t) {
    auto f = detail::random_radial_function(rng);
    const double lhs = std::pow(
        sigma * detail::radial_integral(f, 160, [&](double rr) {
          return std::pow(rr, n - 1.0 + beta * r_exp) * std::pow(std::abs(f.value(rr)), r_exp);
        }),
        1.0 / r_exp);
    const double rhs = std::pow(
        sigma * detail::radial_integral(f, 160, [&](double rr) {
          return std::pow(rr, n - 1.0 + alpha * q) * std::pow(std::abs(f.derivative(rr)), q);
        }),
        1.0 / q);
    if (!(rhs > 0.0)) { ++rep.skipped; continue; }
    cmax = std::max(cmax, lhs / rhs);
  }
  rep.constant_found = cmax;
  detail::UniformRng rng2(seed);
  rep.worst_margin = std::numeric_limits<double>::infinity();
  for (long t = 0; t < test_count; ++t) {
    auto f = detail::random_radial_function(rng2);
    const double lhs = std::pow(
        sigma * detail::radial_integral(f, 160, [&](double rr) {
          return std::pow(rr, n - 1.0 + beta * r_exp) * std::pow(std::abs(f.value(rr)), r_exp);
        }),
        1.0 / r_exp);
    const double rhs = std::pow(
        sigma * detail::radial_integral(f, 160, [&](double rr) {
          return std::pow(rr, n - 1.0 + alpha * q) * std::pow(std::abs(f.derivative(rr)), q);
        }),
        1.0 / q);
    if (rhs > 0.0) {
      rep.worst_margin = std::min(rep.worst_margin, cmax - lhs / rhs);
      if (lhs > cmax * rhs * (1.0 + 1e-12)) ++rep.violations;
    }
  }
  return rep;
}

/// Weighted Hardy inequality on R^k (Lemma B.3 shape):
///   C int |w|^p |y|^-1 [(c0+|y|)^{p-1}]^{xi-1} dy <= int |Dw|^p [(c0+|y|)^{p-1}]^{xi} dy
/// for compactly supported radial w; reports the largest feasible C.
/// `shift` >= 1 exercises the y -> y/shift rescaling form of the estimate.
inline IneqCheckReport check_weighted_hardy(int k, double p, double xi, long test_count,
                                            unsigned seed, double shift = 1.0) {
  if (!(p > 1.0) || xi < 1.0 || k < 3)
    throw std::invalid_argument("check_weighted_hardy: require p > 1, xi >= 1, k >= 3");
  if (shift < 1.0) throw std::invalid_argument("check_weighted_hardy: shift must be >= 1");
  detail::UniformRng rng(seed);
  IneqCheckReport rep;
  rep.inequality_id = "weighted_hardy";
  rep.samples = test_count;
  rep.seed = seed;
  const double sigma = unit_sphere_area(k);
  double cmin = std::numeric_limits<double>::infinity();
  for (long t = 0; t < test_count; ++t) {
    auto f = detail::random_radial_function(rng);
    const double lhs = sigma * detail::radial_integral(f, 160, [&](double rr) {
      return std::pow(std::abs(f.value(rr)), p) / rr *
             std::pow(std::pow(shift + rr, p - 1.0), xi - 1.0) * std::pow(rr, k - 1.0);
    });
    const double rhs = sigma * detail::radial_integral(f, 160, [&](double rr) {
      return std::pow(std::abs(f.derivative(rr)), p) *
             std::pow(std::pow(shift + rr, p - 1.0), xi) * std::pow(rr, k - 1.0);
    });
    if (!(lhs > 0.0)) { ++rep.skipped; continue; }
    cmin = std::min(cmin, rhs / lhs);
  }
  rep.constant_found = cmin;
  rep.worst_margin = cmin;
  if (!(cmin > 0.0)) ++rep.violations;
  return rep;
}

/// Exponent bookkeeping of Lemma B.5 shape: with
///   Q = (pn-1)/(p(n-1) - mu(p-1))  and  theta = (2-p) p1* / (2 p Q),
/// admissible mu forces 1 - p1*/2 < theta < 1.
struct ThetaBounds {
  double theta = 0.0;
  double lower = 0.0;  // 1 - p1*/2
  double upper = 1.0;
  double Q = 0.0;
};

inline ThetaBounds theta_bounds(int n, double p, double mu) {
  if (!(p > 1.0 && p <= 2.0 * n / (n + 1.0)))
    throw std::invalid_argument("theta_bounds: require 1 < p <= 2n/(n+1)");
  const double lo = n * (p - 1.0) / (n - 1.0);
  const double hi = p * (n - 1.0) / (p - 1.0);
  if (!(mu > lo && mu < hi))
    throw std::invalid_argument("theta_bounds: mu out of the admissible interval (" +
                                std::to_string(lo) + ", " + std::to_string(hi) + ")");
  ThetaBounds tb;
  tb.Q = (p * n - 1.0) / (p * (n - 1.0) - mu * (p - 1.0));
  const double p1 = p * (n - 1.0) / (n - p);
  tb.theta = (2.0 - p) * p1 / (2.0 * p * tb.Q);
  tb.lower = 1.0 - 0.5 * p1;
  tb.upper = 1.0;
  if (!(tb.Q > 1.0)) throw std::runtime_error("theta_bounds: Q <= 1 for admissible mu");
  if (!(tb.theta > tb.lower && tb.theta < tb.upper))
    throw std::runtime_error("theta_bounds: theta outside (1 - p1*/2, 1)");
  return tb;
}

}  // namespace hsm
