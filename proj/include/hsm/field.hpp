#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "hsm/extremal_params.hpp"
#include "hsm/grid.hpp"
#include "hsm/quadrature.hpp"

namespace hsm {

enum class FieldKind { generic, extremal, tangent };

/// Nodal samples of a cylindrically symmetric function on a Grid.
struct Field {
  const Grid* grid = nullptr;
  std::vector<double> values;
  FieldKind kind = FieldKind::generic;
  std::optional<ExtremalParams> theta;  // set when kind == extremal or tangent
  int tangent_index = -1;               // set when kind == tangent
  // Fields vanish beyond the mapped domain (D^{1,p} membership); a field
  // that does not (e.g. u = z in a test) can opt out so the far-end
  // stencils fall back to one-sided differences.
  bool decays_at_infinity = true;

  void check_finite() const {
    for (std::size_t q = 0; q < values.size(); ++q)
      if (!std::isfinite(values[q]))
        throw std::invalid_argument("Field: non-finite value at node " + std::to_string(q));
  }
};

inline Field make_field(const Grid& grid, std::vector<double> values,
                        FieldKind kind = FieldKind::generic) {
  if (values.size() != grid.size())
    throw std::invalid_argument("make_field: value count does not match grid");
  Field f;
  f.grid = &grid;
  f.values = std::move(values);
  f.kind = kind;
  f.check_finite();
  return f;
}

/// Discrete gradient of a Field: radial and per-z-axis components.
struct GradField {
  const Grid* grid = nullptr;
  std::vector<double> d_r;
  std::vector<std::vector<double>> d_z;  // one vector per z axis
  std::vector<double> magnitude;

  void compute_magnitude() {
    magnitude.resize(d_r.size());
    for (std::size_t q = 0; q < d_r.size(); ++q) {
      double s = d_r[q] * d_r[q];
      for (const auto& dz : d_z) s += dz[q] * dz[q];
      magnitude[q] = std::sqrt(s);
    }
  }
};

/// One row of a 1D differentiation operator: weights over real axis nodes.
struct StencilRow {
  int lo = 0;
  std::vector<double> w;
};

namespace detail {

// Fornberg stencils of order `order` on arbitrary parameter nodes, with
// optional virtual boundary nodes carrying the known value 0 (dropped from
// the row after weight computation).  Window width 5 gives 4th-order first
// derivatives on smooth fields.
inline std::vector<StencilRow> param_stencils(const std::vector<double>& xs, int order,
                                              std::optional<double> virtual_left,
                                              std::optional<double> virtual_right) {
  const int n = static_cast<int>(xs.size());
  const int width = 5;
  std::vector<double> ext;
  int off = 0;
  if (virtual_left) {
    ext.push_back(*virtual_left);
    off = 1;
  }
  ext.insert(ext.end(), xs.begin(), xs.end());
  if (virtual_right) ext.push_back(*virtual_right);
  const int N = static_cast<int>(ext.size());
  if (N < width) throw std::invalid_argument("param_stencils: need at least 8 nodes per axis");

  std::vector<StencilRow> rows(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const int ii = i + off;
    int lo = std::max(0, std::min(ii - 2, N - width));
    auto w = fd_weights(ext[static_cast<std::size_t>(ii)],
                        std::span<const double>(ext.data() + lo, width), order);
    StencilRow row;
    row.lo = lo - off;
    row.w.assign(w.begin(), w.end());
    // strip virtual entries (their value is identically 0)
    while (!row.w.empty() && row.lo < 0) {
      row.w.erase(row.w.begin());
      ++row.lo;
    }
    while (!row.w.empty() && row.lo + static_cast<int>(row.w.size()) > n) row.w.pop_back();
    rows[static_cast<std::size_t>(i)] = std::move(row);
  }
  return rows;
}

}  // namespace detail

/// First- and second-derivative stencils along one grid axis, already
/// converted to physical coordinates by the chain rule.
struct AxisDiffOps {
  std::vector<StencilRow> d1;  // d/dx
  std::vector<StencilRow> d2;  // d^2/dx^2
};

/// Build derivative stencils for the radial axis (axis == -1) or z axis.
/// `decaying` selects the zero-limit treatment at the mapped far ends.
inline AxisDiffOps axis_diff_ops(const Grid& grid, int axis, bool decaying) {
  const bool radial = axis < 0;
  const std::vector<double>& param = radial ? grid.t_nodes : grid.s_nodes;
  std::optional<double> vleft, vright;
  if (radial) {
    // r = 0 end is natural (one-sided stencils); t = 1 is r = infinity.
    if (decaying) vright = 1.0;
  } else if (decaying) {
    vleft = -1.0;
    vright = 1.0;
  }
  auto p1 = detail::param_stencils(param, 1, vleft, vright);
  auto p2 = detail::param_stencils(param, 2, vleft, vright);

  const int n = static_cast<int>(param.size());
  AxisDiffOps ops;
  ops.d1.resize(static_cast<std::size_t>(n));
  ops.d2.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double dpdx, d2pdx2;
    if (radial) {
      const double t = param[static_cast<std::size_t>(i)];
      dpdx = (1.0 - t) * (1.0 - t) / grid.L_r;
      d2pdx2 = -2.0 * (1.0 - t) * (1.0 - t) * (1.0 - t) / (grid.L_r * grid.L_r);
    } else {
      const double s = param[static_cast<std::size_t>(i)];
      const double zp = grid.L_z * (1.0 + s * s) / std::pow(1.0 - s * s, 2);
      const double zpp = 2.0 * grid.L_z * s * (3.0 + s * s) / std::pow(1.0 - s * s, 3);
      dpdx = 1.0 / zp;
      d2pdx2 = -zpp / (zp * zp * zp);
    }
    StencilRow r1;
    r1.lo = p1[static_cast<std::size_t>(i)].lo;
    for (double w : p1[static_cast<std::size_t>(i)].w) r1.w.push_back(w * dpdx);
    ops.d1[static_cast<std::size_t>(i)] = std::move(r1);

    // d2f/dx2 = (dp/dx)^2 f_pp + (d2p/dx2) f_p
    StencilRow r2 = p2[static_cast<std::size_t>(i)];
    for (double& w : r2.w) w *= dpdx * dpdx;
    const StencilRow& s1 = p1[static_cast<std::size_t>(i)];
    const int lo = std::min(r2.lo, s1.lo);
    const int hi = std::max(r2.lo + static_cast<int>(r2.w.size()),
                            s1.lo + static_cast<int>(s1.w.size()));
    StencilRow merged;
    merged.lo = lo;
    merged.w.assign(static_cast<std::size_t>(hi - lo), 0.0);
    for (std::size_t j = 0; j < r2.w.size(); ++j)
      merged.w[static_cast<std::size_t>(r2.lo - lo) + j] += r2.w[j];
    for (std::size_t j = 0; j < s1.w.size(); ++j)
      merged.w[static_cast<std::size_t>(s1.lo - lo) + j] += d2pdx2 * s1.w[j];
    ops.d2[static_cast<std::size_t>(i)] = std::move(merged);
  }
  return ops;
}

namespace detail {

// Apply a per-node 1D stencil along one tensor axis of the flattened field.
// axis == -1 is the radial axis; otherwise the axis-th z direction.
inline std::vector<double> apply_axis(const Grid& grid, const std::vector<StencilRow>& rows,
                                      std::span<const double> values, int axis) {
  std::vector<double> out(values.size(), 0.0);
  const int m = grid.params.m;
  std::size_t stride = 1;
  if (axis < 0) {
    for (int a = 0; a < m; ++a) stride *= static_cast<std::size_t>(grid.nz);
  } else {
    for (int a = m - 1; a > axis; --a) stride *= static_cast<std::size_t>(grid.nz);
  }
  for (std::size_t q = 0; q < values.size(); ++q) {
    const int i = axis < 0 ? grid.r_index(q) : grid.z_index(q, axis);
    const StencilRow& row = rows[static_cast<std::size_t>(i)];
    const std::size_t base = q - static_cast<std::size_t>(i) * stride;
    double acc = 0.0;
    for (std::size_t j = 0; j < row.w.size(); ++j)
      acc += row.w[j] * values[base + static_cast<std::size_t>(row.lo + static_cast<int>(j)) * stride];
    out[q] = acc;
  }
  return out;
}

}  // namespace detail

/// 4th-order finite-difference gradient in the mapped parameters, chain-ruled
/// to physical (r, z).  One-sided stencils at the r = 0 end; the far ends use
/// the zero limit when the field decays at infinity.
inline GradField differentiate(const Field& field) {
  const Grid& grid = *field.grid;
  if (grid.nr < 8 || (grid.params.m > 0 && grid.nz < 8))
    throw std::invalid_argument("differentiate: need at least 8 nodes per axis");
  field.check_finite();
  GradField g;
  g.grid = &grid;
  auto rops = axis_diff_ops(grid, -1, field.decays_at_infinity);
  g.d_r = detail::apply_axis(grid, rops.d1, field.values, -1);
  g.d_z.resize(static_cast<std::size_t>(grid.params.m));
  for (int a = 0; a < grid.params.m; ++a) {
    auto zops = axis_diff_ops(grid, a, field.decays_at_infinity);
    g.d_z[static_cast<std::size_t>(a)] = detail::apply_axis(grid, zops.d1, field.values, a);
  }
  g.compute_magnitude();
  return g;
}

}  // namespace hsm
