#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "hsm/extremal.hpp"
#include "hsm/field.hpp"
#include "hsm/functionals.hpp"
#include "hsm/grid.hpp"

using namespace hsm;
using Catch::Approx;

namespace {

Field constant_field(const Grid& g, double c) {
  Field f = make_field(g, std::vector<double>(g.size(), c));
  f.decays_at_infinity = false;
  return f;
}

}  // namespace

TEST_CASE("derivative of a constant vanishes") {
  Params P(4, 2.0, 3);
  Grid g = make_grid(P, 32, 32);
  GradField d = differentiate(constant_field(g, 1.0));
  for (std::size_t q = 0; q < g.size(); ++q) {
    REQUIRE(std::abs(d.d_r[q]) < 1e-12);
    REQUIRE(std::abs(d.d_z[0][q]) < 1e-12);
  }
}

TEST_CASE("linear field in z differentiates exactly on interior nodes") {
  Params P(4, 2.0, 3);
  Grid g = make_grid(P, 16, 128);
  std::vector<double> vals(g.size());
  for (std::size_t q = 0; q < g.size(); ++q) vals[q] = g.z_of(q, 0);
  Field f = make_field(g, std::move(vals));
  f.decays_at_infinity = false;  // z is not a decaying profile
  GradField d = differentiate(f);
  // interior of the well-mapped region: the parameter-space stencil is exact
  // for polynomials in the parameter, and s -> z is locally polynomial-like
  // only away from the map poles
  std::size_t checked = 0;
  for (std::size_t q = 0; q < g.size(); ++q) {
    const int iz = g.z_index(q, 0);
    if (iz < 2 || iz > g.nz - 3) continue;
    if (std::abs(g.z_of(q, 0)) > 2.0) continue;
    REQUIRE(d.d_z[0][q] == Approx(1.0).margin(1e-8));
    REQUIRE(std::abs(d.d_r[q]) < 1e-8);
    ++checked;
  }
  REQUIRE(checked > 100);
}

TEST_CASE("extremal-tagged field reproduces the closed form at every node") {
  Params P(4, 2.0, 3);
  Grid g = make_grid(P, 24, 24);
  ExtremalParams th(1.2, 0.8, {0.3});
  Field v = extremal_field(P, g, th);
  REQUIRE(v.kind == FieldKind::extremal);
  for (std::size_t q = 0; q < g.size(); ++q) {
    const double z[1] = {g.z_of(q, 0)};
    const double want = extremal_eval(P, th, g.r_of(q), z);
    REQUIRE(v.values[q] == Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("finite-difference gradient magnitude near the origin approaches (n-p)/(p-1)") {
  Params P(4, 2.0, 3);
  ExtremalParams th(1.0, 1.0, {0.0});
  // exact limit at (0+, 0): |Dv| = (n-p)/(p-1) = 2 since W = |x~| = 1 there
  {
    const double z0[1] = {0.0};
    REQUIRE(extremal_gradient(P, th, 1e-14, z0).magnitude == Approx(2.0).epsilon(1e-10));
  }
  auto mag_err_near_origin = [&](int n) {
    Grid g = make_grid(P, n, n);
    GradField d = differentiate(extremal_field(P, g, th));
    std::size_t best = 0;
    double dist = 1e300;
    for (std::size_t q = 0; q < g.size(); ++q) {
      const double s = g.r_of(q) + std::abs(g.z_of(q, 0));
      if (s < dist) {
        dist = s;
        best = q;
      }
    }
    const double z[1] = {g.z_of(best, 0)};
    const double exact = extremal_gradient(P, th, g.r_of(best), z).magnitude;
    // FD value approaches the closed form, which itself approaches 2
    REQUIRE(exact == Approx(2.0).margin(0.1));
    return std::abs(d.magnitude[best] - exact);
  };
  const double e64 = mag_err_near_origin(64);
  REQUIRE(e64 < 5e-3);
  REQUIRE(mag_err_near_origin(96) <= e64);
}

TEST_CASE("differentiate is linear to machine precision") {
  Params P(4, 2.0, 3);
  Grid g = make_grid(P, 24, 24);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> a(g.size()), b(g.size()), c(g.size());
  for (std::size_t q = 0; q < g.size(); ++q) {
    a[q] = u(rng) / (1.0 + g.r_of(q));
    b[q] = u(rng) / (1.0 + std::abs(g.z_of(q, 0)));
    c[q] = 2.5 * a[q] - 0.75 * b[q];
  }
  GradField da = differentiate(make_field(g, a));
  GradField db = differentiate(make_field(g, b));
  GradField dc = differentiate(make_field(g, c));
  double scale = 0.0;
  for (std::size_t q = 0; q < g.size(); ++q)
    scale = std::max(scale, std::abs(dc.d_r[q]) + std::abs(dc.d_z[0][q]));
  for (std::size_t q = 0; q < g.size(); ++q) {
    REQUIRE(std::abs(dc.d_r[q] - (2.5 * da.d_r[q] - 0.75 * db.d_r[q])) < 1e-12 * scale);
    REQUIRE(std::abs(dc.d_z[0][q] - (2.5 * da.d_z[0][q] - 0.75 * db.d_z[0][q])) < 1e-12 * scale);
  }
}

TEST_CASE("gradient magnitude satisfies the component identity") {
  Params P(5, 2.0, 3);  // two z axes
  Grid g = make_grid(P, 12, 12);
  std::vector<double> vals(g.size());
  for (std::size_t q = 0; q < g.size(); ++q)
    vals[q] = std::exp(-g.r_of(q) - 0.5 * std::abs(g.z_of(q, 0)) - 0.3 * std::abs(g.z_of(q, 1)));
  GradField d = differentiate(make_field(g, vals));
  for (std::size_t q = 0; q < g.size(); ++q) {
    const double m2 = d.d_r[q] * d.d_r[q] + d.d_z[0][q] * d.d_z[0][q] + d.d_z[1][q] * d.d_z[1][q];
    REQUIRE(d.magnitude[q] == Approx(std::sqrt(m2)).epsilon(1e-15));
  }
}

TEST_CASE("finite differences converge to the closed-form extremal gradient at 4th order") {
  Params P(4, 2.0, 3);
  ExtremalParams th(1.0, 1.0, {0.0});
  auto weighted_error = [&](int n) {
    Grid g = make_grid(P, n, 2 * n);
    Field v = extremal_field(P, g, th);
    GradField fd = differentiate(v);
    GradField cf = extremal_grad_field(P, g, th);
    std::vector<double> err(g.size()), ref(g.size());
    for (std::size_t q = 0; q < g.size(); ++q) {
      const double dr = fd.d_r[q] - cf.d_r[q];
      const double dz = fd.d_z[0][q] - cf.d_z[0][q];
      const double w = std::pow(std::abs(v.values[q]), P.p1_star - 2.0) / g.r_of(q);
      err[q] = w * (dr * dr + dz * dz);
      ref[q] = w * (cf.d_r[q] * cf.d_r[q] + cf.d_z[0][q] * cf.d_z[0][q]);
    }
    return std::sqrt(integrate(g, err) / integrate(g, ref));
  };
  const double eN = weighted_error(32);
  const double e2N = weighted_error(64);
  REQUIRE(e2N < eN / 6.0);  // 4th-order stencils: ideally ~16x
}

TEST_CASE("make_field rejects size mismatch and non-finite values") {
  Params P(4, 2.0, 3);
  Grid g = make_grid(P, 12, 12);
  REQUIRE_THROWS_AS(make_field(g, std::vector<double>(3, 0.0)), std::invalid_argument);
  std::vector<double> bad(g.size(), 0.0);
  bad[0] = std::numeric_limits<double>::infinity();
  REQUIRE_THROWS_AS(make_field(g, bad), std::invalid_argument);
}
