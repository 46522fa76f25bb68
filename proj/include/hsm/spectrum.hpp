#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "hsm/extremal.hpp"
#include "hsm/field.hpp"
#include "hsm/functionals.hpp"
#include "hsm/grid.hpp"
#include "hsm/params.hpp"

namespace hsm {

struct AssembleOptions {
  // Strength of the consistent O(h^4) high-frequency penalty added to the
  // quadratic form.  The raw finite-difference form annihilates grid-scale
  // sawtooth modes (the centered first-derivative symbol vanishes at the
  // Nyquist frequency), which pollutes the low spectrum with spurious
  // eigenvalues; the penalty lifts those modes without touching smooth
  // fields beyond O(h^4).
  double stab_tau = 4.0;
  double asymmetry_tol = 1e-12;
};

/// Discretized quadratic forms of the linearized operator at v_theta:
///   phi' A phi ~ int |Dv|^{p-2}|Dphi|^2 + (p-2)|Dv|^{p-4}(Dv.Dphi)^2 dx
///   phi' B phi ~ int |y|^-1 v^{p1*-2} phi^2 dx   (mass-lumped diagonal)
struct AssembledForms {
  Eigen::SparseMatrix<double> A;
  Eigen::VectorXd B_diag;
  double sharp_S = 0.0;      // quadrature sharp constant on this grid
  double norm_factor = 0.0;  // ||v_theta||^{p - p1*}
  double asymmetry = 0.0;    // max |A - A'| before symmetrization
  ExtremalParams theta;
};

namespace detail {

struct AxisRows {
  std::vector<StencilRow> d1;
  std::vector<StencilRow> pen;  // h_param^2 * d2/dparam^2, chain-ruled like d1
};

inline AxisRows stabilized_axis_rows(const Grid& grid, int axis) {
  AxisRows out;
  AxisDiffOps ops = axis_diff_ops(grid, axis, /*decaying=*/true);
  out.d1 = std::move(ops.d1);

  const bool radial = axis < 0;
  const std::vector<double>& param = radial ? grid.t_nodes : grid.s_nodes;
  std::optional<double> vleft, vright;
  if (radial) vright = 1.0;
  else { vleft = -1.0; vright = 1.0; }
  auto p2 = detail::param_stencils(param, 2, vleft, vright);
  const int n = static_cast<int>(param.size());
  out.pen.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const std::size_t ui = static_cast<std::size_t>(i);
    const double h = 0.5 * (param[static_cast<std::size_t>(std::min(i + 1, n - 1))] -
                            param[static_cast<std::size_t>(std::max(i - 1, 0))]) *
                     (i == 0 || i == n - 1 ? 2.0 : 1.0);
    double dpdx;
    if (radial) {
      const double t = param[ui];
      dpdx = (1.0 - t) * (1.0 - t) / grid.L_r;
    } else {
      const double s = param[ui];
      dpdx = std::pow(1.0 - s * s, 2) / (grid.L_z * (1.0 + s * s));
    }
    StencilRow row = p2[ui];
    for (double& w : row.w) w *= h * h * dpdx;
    out.pen[ui] = std::move(row);
  }
  return out;
}

inline std::size_t axis_stride(const Grid& grid, int axis) {
  std::size_t stride = 1;
  if (axis < 0) {
    for (int a = 0; a < grid.params.m; ++a) stride *= static_cast<std::size_t>(grid.nz);
  } else {
    for (int a = grid.params.m - 1; a > axis; --a) stride *= static_cast<std::size_t>(grid.nz);
  }
  return stride;
}

}  // namespace detail

inline AssembledForms assemble_forms(const Params& params, const Grid& grid,
                                     const ExtremalParams& theta,
                                     const AssembleOptions& opt = {}) {
  theta.validate();
  const std::size_t N = grid.size();
  const double p = params.p;

  Field v = extremal_field(params, grid, theta);
  GradField dv = extremal_grad_field(params, grid, theta);

  // per-node form coefficients
  std::vector<double> c1(N), c2(N);
  Eigen::VectorXd B(N);
  for (std::size_t q = 0; q < N; ++q) {
    const double w = grid.quad_weights[q];
    const double mag = dv.magnitude[q];
    c1[q] = w * std::pow(mag, p - 2.0);
    c2[q] = (p - 2.0) * w * std::pow(mag, p - 4.0);
    B(static_cast<Eigen::Index>(q)) =
        w * std::pow(std::abs(v.values[q]), params.p1_star - 2.0) / grid.r_of(q);
    if (!std::isfinite(c1[q]) || !std::isfinite(c2[q]) || !std::isfinite(B(static_cast<Eigen::Index>(q))))
      throw std::runtime_error("assemble_forms: non-finite weight at node " + std::to_string(q));
    // pointwise lower bound of the form for p < 2: the (p-2) term cannot
    // overwhelm the first one since (Dv.Dphi)^2 <= |Dv|^2 |Dphi|^2
    if (p < 2.0 && c1[q] + c2[q] * mag * mag <= 0.0)
      throw std::runtime_error("assemble_forms: positivity bound violated at node " + std::to_string(q));
  }

  const int axes = 1 + params.m;
  std::vector<detail::AxisRows> rows(static_cast<std::size_t>(axes));
  std::vector<std::size_t> strides(static_cast<std::size_t>(axes));
  rows[0] = detail::stabilized_axis_rows(grid, -1);
  strides[0] = detail::axis_stride(grid, -1);
  for (int a = 0; a < params.m; ++a) {
    rows[static_cast<std::size_t>(a + 1)] = detail::stabilized_axis_rows(grid, a);
    strides[static_cast<std::size_t>(a + 1)] = detail::axis_stride(grid, a);
  }

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(N * 64);

  // gather the (global index, weight) row of one axis operator at node q
  auto gather = [&](const std::vector<StencilRow>& srows, int axis, std::size_t q,
                    std::vector<std::pair<std::size_t, double>>& out) {
    const int i = axis < 0 ? grid.r_index(q) : grid.z_index(q, axis);
    const StencilRow& row = srows[static_cast<std::size_t>(i)];
    const std::size_t stride = strides[static_cast<std::size_t>(axis + 1)];
    const std::size_t base = q - static_cast<std::size_t>(i) * stride;
    out.clear();
    for (std::size_t j = 0; j < row.w.size(); ++j)
      out.emplace_back(base + static_cast<std::size_t>(row.lo + static_cast<int>(j)) * stride, row.w[j]);
  };

  std::vector<std::pair<std::size_t, double>> ga, hrow;
  for (std::size_t q = 0; q < N; ++q) {
    hrow.clear();
    for (int axis = -1; axis < params.m; ++axis) {
      const detail::AxisRows& ar = rows[static_cast<std::size_t>(axis + 1)];
      gather(ar.d1, axis, q, ga);
      // |Dv|^{p-2} |Dphi|^2 contribution of this axis
      for (const auto& [gi, wi] : ga)
        for (const auto& [gj, wj] : ga)
          trips.emplace_back(static_cast<int>(gi), static_cast<int>(gj), c1[q] * wi * wj);
      // accumulate Dv . Dphi row
      const double dvc = axis < 0 ? dv.d_r[q] : dv.d_z[static_cast<std::size_t>(axis)][q];
      for (const auto& [gi, wi] : ga) hrow.emplace_back(gi, dvc * wi);
      // sawtooth penalty, weighted like the first term
      if (opt.stab_tau > 0.0) {
        gather(ar.pen, axis, q, ga);
        for (const auto& [gi, wi] : ga)
          for (const auto& [gj, wj] : ga)
            trips.emplace_back(static_cast<int>(gi), static_cast<int>(gj), opt.stab_tau * c1[q] * wi * wj);
      }
    }
    if (c2[q] != 0.0) {
      for (const auto& [gi, wi] : hrow)
        for (const auto& [gj, wj] : hrow)
          trips.emplace_back(static_cast<int>(gi), static_cast<int>(gj), c2[q] * wi * wj);
    }
  }

  AssembledForms out;
  out.A.resize(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
  out.A.setFromTriplets(trips.begin(), trips.end());
  out.B_diag = B;
  out.theta = theta;

  // symmetry audit, then exact symmetrization
  Eigen::SparseMatrix<double> At = out.A.transpose();
  double asym = 0.0, scale = 0.0;
  for (int c = 0; c < out.A.outerSize(); ++c)
    for (Eigen::SparseMatrix<double>::InnerIterator it(out.A, c); it; ++it)
      scale = std::max(scale, std::abs(it.value()));
  Eigen::SparseMatrix<double> diff = out.A - At;
  for (int c = 0; c < diff.outerSize(); ++c)
    for (Eigen::SparseMatrix<double>::InnerIterator it(diff, c); it; ++it)
      asym = std::max(asym, std::abs(it.value()));
  out.asymmetry = scale > 0.0 ? asym / scale : 0.0;
  if (out.asymmetry > opt.asymmetry_tol)
    throw std::runtime_error("assemble_forms: asymmetry " + std::to_string(out.asymmetry) +
                             " exceeds tolerance");
  out.A = 0.5 * (out.A + At);

  out.sharp_S = sharp_constant(params, grid);
  const double wn = weighted_lpstar_norm(grid, v.values);
  out.norm_factor = std::pow(wn, p - params.p1_star);
  return out;
}

struct EigsOptions {
  int max_iterations = 200;
  double residual_tol = 1e-9;
  double shift = 0.0;  // relative negative shift added as |shift| * B
  unsigned seed = 7;
  bool dense = false;  // dense solver for small problems / verification
};

/// Generalized eigenpairs of A x = alpha B x.
struct SpectralResult {
  std::vector<double> eigenvalues;  // ascending
  std::vector<Field> eigenvectors;  // B-orthonormal
  double sharp_S = 0.0;
  double norm_factor = 0.0;  // ||v||^{p - p1*}
  std::vector<double> residuals;
  int grid_nr = 0, grid_nz = 0;
  int iterations = 0;
  double b_gram_error = 0.0;
  ExtremalParams theta;
};

inline SpectralResult eigs(const Grid& grid, const AssembledForms& forms, int count,
                           const EigsOptions& opt = {}) {
  const Eigen::Index N = forms.A.rows();
  if (count < 1 || count > N) throw std::invalid_argument("eigs: invalid eigenpair count");
  for (Eigen::Index i = 0; i < N; ++i)
    if (!(forms.B_diag(i) > 0.0)) throw std::runtime_error("eigs: B must be positive diagonal");

  Eigen::VectorXd Bs = forms.B_diag.cwiseSqrt();
  SpectralResult res;
  res.sharp_S = forms.sharp_S;
  res.norm_factor = forms.norm_factor;
  res.grid_nr = grid.nr;
  res.grid_nz = grid.nz;
  res.theta = forms.theta;

  Eigen::MatrixXd evec;  // columns: B-orthonormal eigenvectors (nodal values)
  Eigen::VectorXd eval;

  if (opt.dense || N <= 600) {
    Eigen::MatrixXd C = Eigen::MatrixXd(forms.A);
    for (Eigen::Index i = 0; i < N; ++i)
      for (Eigen::Index j = 0; j < N; ++j) C(i, j) /= Bs(i) * Bs(j);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
    if (es.info() != Eigen::Success) throw std::runtime_error("eigs: dense eigensolver failed");
    eval = es.eigenvalues().head(count);
    evec.resize(N, count);
    for (int j = 0; j < count; ++j) evec.col(j) = es.eigenvectors().col(j).cwiseQuotient(Bs);
    res.iterations = 1;
  } else {
    // Shift-invert block subspace iteration on B^{-1/2} A B^{-1/2}.
    const int b = std::min<Eigen::Index>(N, count + std::max(6, count / 2));
    double scale = 0.0;
    for (Eigen::Index i = 0; i < N; ++i) scale = std::max(scale, std::abs(forms.A.coeff(i, i)));
    const double sigma = opt.shift > 0.0 ? opt.shift : 1e-10 * scale;
    Eigen::SparseMatrix<double> M = forms.A;
    for (Eigen::Index i = 0; i < N; ++i) M.coeffRef(i, i) += sigma * forms.B_diag(i);
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(M);
    if (ldlt.info() != Eigen::Success)
      throw std::runtime_error("eigs: factorization of shifted operator failed");

    std::mt19937_64 rng(opt.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd Y(N, b);
    for (Eigen::Index i = 0; i < N; ++i)
      for (int j = 0; j < b; ++j) Y(i, j) = gauss(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr0(Y);
    Y = qr0.householderQ() * Eigen::MatrixXd::Identity(N, b);

    for (int it = 1; it <= opt.max_iterations; ++it) {
      res.iterations = it;
      // Y <- orth( B^{1/2} M^{-1} B^{1/2} Y )
      Eigen::MatrixXd Z = Bs.asDiagonal() * ldlt.solve(Eigen::MatrixXd(Bs.asDiagonal() * Y));
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(Z);
      Y = qr.householderQ() * Eigen::MatrixXd::Identity(N, b);

      // Rayleigh-Ritz for the pencil (A, B) on span(B^{-1/2} Y)
      Eigen::MatrixXd Phi = Y.array().colwise() / Bs.array();
      Eigen::MatrixXd APhi = forms.A * Phi;
      Eigen::MatrixXd H = Phi.transpose() * APhi;
      H = 0.5 * (H + H.transpose());
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> small(H);
      Eigen::VectorXd theta_r = small.eigenvalues();
      Eigen::MatrixXd Vr = small.eigenvectors();

      Eigen::MatrixXd Ritz = Phi * Vr.leftCols(count);
      Eigen::MatrixXd ARitz = APhi * Vr.leftCols(count);
      // residual in the symmetrized metric: || C y - theta y || / || y ||
      // with C = B^{-1/2} A B^{-1/2}, y = B^{1/2} x
      double worst = 0.0;
      for (int j = 0; j < count; ++j) {
        Eigen::VectorXd rv = ARitz.col(j) - theta_r(j) * (forms.B_diag.asDiagonal() * Ritz.col(j));
        const double rnorm = rv.cwiseQuotient(Bs).norm() / Ritz.col(j).cwiseProduct(Bs).norm();
        worst = std::max(worst, rnorm / std::max(1.0, std::abs(theta_r(j))));
      }
      // rotate the subspace so that leading Ritz directions stay first
      Y = Y * Vr;
      if (worst <= opt.residual_tol) {
        eval = theta_r.head(count);
        evec = Ritz;
        break;
      }
      if (it == opt.max_iterations)
        throw std::runtime_error("eigs: subspace iteration did not converge; worst residual " +
                                 std::to_string(worst));
    }
  }

  // explicit B-orthonormalization (Cholesky of the Ritz B-Gram)
  Eigen::MatrixXd G = evec.transpose() * (forms.B_diag.asDiagonal() * evec);
  Eigen::LLT<Eigen::MatrixXd> llt(G);
  evec = evec * llt.matrixL().toDenseMatrix().inverse().transpose();

  res.eigenvalues.assign(eval.data(), eval.data() + count);
  res.residuals.resize(static_cast<std::size_t>(count));
  for (int j = 0; j < count; ++j) {
    Eigen::VectorXd x = evec.col(j);
    // pencil residual in the symmetrized metric (invariant under the
    // diagonal rescaling that relates (A, B) to B^{-1/2} A B^{-1/2})
    Eigen::VectorXd rv = forms.A * x - eval(j) * (forms.B_diag.asDiagonal() * x);
    res.residuals[static_cast<std::size_t>(j)] = rv.cwiseQuotient(Bs).norm() /
                                                 (x.cwiseProduct(Bs).norm() *
                                                  std::max(1.0, std::abs(eval(j))));
    std::vector<double> vals(x.data(), x.data() + N);
    res.eigenvectors.push_back(make_field(grid, std::move(vals)));
  }
  Eigen::MatrixXd G2 = evec.transpose() * (forms.B_diag.asDiagonal() * evec);
  res.b_gram_error = (G2 - Eigen::MatrixXd::Identity(count, count)).cwiseAbs().maxCoeff();

  for (int j = 1; j < count; ++j)
    if (res.eigenvalues[static_cast<std::size_t>(j)] <
        res.eigenvalues[static_cast<std::size_t>(j - 1)] - 1e-12)
      throw std::runtime_error("eigs: eigenvalues not ascending");
  return res;
}

/// Rayleigh quotient of nodal values phi against assembled forms.
inline double rayleigh_quotient(const AssembledForms& forms, std::span<const double> phi) {
  Eigen::Map<const Eigen::VectorXd> x(phi.data(), static_cast<Eigen::Index>(phi.size()));
  const double num = x.dot(forms.A * x);
  const double den = x.dot(forms.B_diag.asDiagonal() * x);
  return num / den;
}

/// Report of the eigenvalue/eigenspace verification.
struct ThmEfReport {
  double alpha1 = 0.0, alpha1_predicted = 0.0, alpha1_rel_error = 0.0;
  std::vector<double> alpha2_cluster;
  double alpha2_predicted = 0.0, alpha2_rel_error = 0.0;
  double ratio = 0.0, ratio_predicted = 0.0, ratio_rel_error = 0.0;
  double e1_cosine = 0.0;       // alignment of first eigenvector with v
  double e2_min_cosine = 0.0;   // smallest principal-angle cosine of E2 vs tangent span
};

namespace detail {

// Columns of X and Y are B-orthonormalized; returns singular values of
// X^T B Y (cosines of the principal angles).
inline Eigen::VectorXd principal_cosines(const Eigen::VectorXd& Bdiag, Eigen::MatrixXd X,
                                         Eigen::MatrixXd Y) {
  auto borth = [&](Eigen::MatrixXd& M) {
    Eigen::MatrixXd G = M.transpose() * (Bdiag.asDiagonal() * M);
    Eigen::LLT<Eigen::MatrixXd> llt(G);
    M = M * llt.matrixL().toDenseMatrix().inverse().transpose();
  };
  borth(X);
  borth(Y);
  Eigen::MatrixXd C = X.transpose() * (Bdiag.asDiagonal() * Y);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(C);
  return svd.singularValues();
}

}  // namespace detail

inline ThmEfReport verify_thm_ef(const Grid& grid, const AssembledForms& forms,
                                 const SpectralResult& result, const TangentBasis& basis) {
  const Params& P = grid.params;
  const int m = P.m;
  if (static_cast<int>(result.eigenvalues.size()) < m + 2)
    throw std::invalid_argument("verify_thm_ef: need at least m+2 eigenpairs");
  ThmEfReport rep;
  const double base = std::pow(result.sharp_S, P.p) * result.norm_factor;
  rep.alpha1 = result.eigenvalues[0];
  rep.alpha1_predicted = (P.p - 1.0) * base;
  rep.alpha1_rel_error = std::abs(rep.alpha1 - rep.alpha1_predicted) / rep.alpha1_predicted;
  rep.alpha2_predicted = (P.p1_star - 1.0) * base;
  rep.alpha2_rel_error = 0.0;
  for (int j = 1; j <= m + 1; ++j) {
    rep.alpha2_cluster.push_back(result.eigenvalues[static_cast<std::size_t>(j)]);
    rep.alpha2_rel_error = std::max(
        rep.alpha2_rel_error,
        std::abs(result.eigenvalues[static_cast<std::size_t>(j)] - rep.alpha2_predicted) /
            rep.alpha2_predicted);
  }
  rep.ratio = result.eigenvalues[1] / result.eigenvalues[0];
  rep.ratio_predicted = (P.p1_star - 1.0) / (P.p - 1.0);
  rep.ratio_rel_error = std::abs(rep.ratio - rep.ratio_predicted) / rep.ratio_predicted;

  const Eigen::Index N = static_cast<Eigen::Index>(grid.size());
  Eigen::MatrixXd X1(N, 1), Y1(N, 1);
  for (Eigen::Index q = 0; q < N; ++q) {
    X1(q, 0) = result.eigenvectors[0].values[static_cast<std::size_t>(q)];
    Y1(q, 0) = basis.fields[0].values[static_cast<std::size_t>(q)];
  }
  rep.e1_cosine = detail::principal_cosines(forms.B_diag, X1, Y1)(0);

  Eigen::MatrixXd X2(N, m + 1), Y2(N, m + 1);
  for (int j = 0; j <= m; ++j)
    for (Eigen::Index q = 0; q < N; ++q) {
      X2(q, j) = result.eigenvectors[static_cast<std::size_t>(1 + j)].values[static_cast<std::size_t>(q)];
      Y2(q, j) = basis.fields[static_cast<std::size_t>(1 + j)].values[static_cast<std::size_t>(q)];
    }
  rep.e2_min_cosine = detail::principal_cosines(forms.B_diag, X2, Y2).minCoeff();
  return rep;
}

struct StrongApplyResult {
  Field field;
  bool resolution_warning = false;
};

/// Strong-form application of the linearized operator in the simplified
/// W(x) coefficients, valid for theta = (a, 1, 0):
///   L_v phi = -C W^{-e1} Lap phi - (p-2)(k-1) C W^{-e2} (x~.Dphi)/|y|
///             - (p-2) C W^{-e2} (x~ . D^2 phi . x~)
/// with C = |a|^{p-2} ((n-p)/(p-1))^{p-2} and x~ = ((1+|y|) y/|y|, z).
inline StrongApplyResult apply_linearized_strong(const Params& params, const Grid& grid,
                                                 const ExtremalParams& theta, const Field& phi) {
  theta.validate();
  if (std::abs(theta.lambda - 1.0) > 1e-14)
    throw std::invalid_argument("apply_linearized_strong: requires lambda = 1");
  for (double zp : theta.z_prime)
    if (zp != 0.0) throw std::invalid_argument("apply_linearized_strong: requires z' = 0");
  phi.check_finite();

  const double p = params.p;
  const int k = params.k;
  const int m = params.m;
  const double Cnp = std::pow(std::abs(theta.a), p - 2.0) *
                     std::pow((params.n - p) / (p - 1.0), p - 2.0);
  const double e1 = -(params.n - 1.0) * (p - 2.0) / (2.0 * (p - 1.0));
  const double e2 = -(params.n * (p - 2.0) + p) / (2.0 * (p - 1.0));

  AxisDiffOps rops = axis_diff_ops(grid, -1, phi.decays_at_infinity);
  std::vector<double> phi_r = detail::apply_axis(grid, rops.d1, phi.values, -1);
  std::vector<double> phi_rr = detail::apply_axis(grid, rops.d2, phi.values, -1);
  std::vector<std::vector<double>> phi_z(static_cast<std::size_t>(m)),
      phi_zz(static_cast<std::size_t>(m)), phi_rz(static_cast<std::size_t>(m));
  std::vector<std::vector<std::vector<double>>> phi_zij;
  for (int a = 0; a < m; ++a) {
    AxisDiffOps zops = axis_diff_ops(grid, a, phi.decays_at_infinity);
    phi_z[static_cast<std::size_t>(a)] = detail::apply_axis(grid, zops.d1, phi.values, a);
    phi_zz[static_cast<std::size_t>(a)] = detail::apply_axis(grid, zops.d2, phi.values, a);
    phi_rz[static_cast<std::size_t>(a)] =
        detail::apply_axis(grid, zops.d1, phi_r, a);
  }
  if (m > 1) {
    phi_zij.assign(static_cast<std::size_t>(m), {});
    for (int a = 0; a < m; ++a) {
      phi_zij[static_cast<std::size_t>(a)].resize(static_cast<std::size_t>(m));
      for (int b2 = a + 1; b2 < m; ++b2) {
        AxisDiffOps zops = axis_diff_ops(grid, b2, phi.decays_at_infinity);
        phi_zij[static_cast<std::size_t>(a)][static_cast<std::size_t>(b2)] =
            detail::apply_axis(grid, zops.d1, phi_z[static_cast<std::size_t>(a)], b2);
      }
    }
  }

  std::vector<double> out(grid.size());
  for (std::size_t q = 0; q < grid.size(); ++q) {
    const double r = grid.r_of(q);
    double W = (1.0 + r) * (1.0 + r);
    for (int a = 0; a < m; ++a) W += grid.z_of(q, a) * grid.z_of(q, a);

    double lap = phi_rr[q] + (k - 1.0) / r * phi_r[q];
    double xtd = (1.0 + r) * phi_r[q];
    double xddx = (1.0 + r) * (1.0 + r) * phi_rr[q];
    for (int a = 0; a < m; ++a) {
      const double za = grid.z_of(q, a);
      lap += phi_zz[static_cast<std::size_t>(a)][q];
      xtd += za * phi_z[static_cast<std::size_t>(a)][q];
      xddx += 2.0 * (1.0 + r) * za * phi_rz[static_cast<std::size_t>(a)][q];
      xddx += za * za * phi_zz[static_cast<std::size_t>(a)][q];
      for (int b2 = a + 1; b2 < m; ++b2)
        xddx += 2.0 * za * grid.z_of(q, b2) *
                phi_zij[static_cast<std::size_t>(a)][static_cast<std::size_t>(b2)][q];
    }
    out[q] = -Cnp * std::pow(W, e1) * lap -
             (p - 2.0) * (k - 1.0) * Cnp * std::pow(W, e2) * xtd / r -
             (p - 2.0) * Cnp * std::pow(W, e2) * xddx;
  }
  StrongApplyResult res{make_field(grid, std::move(out)), grid.nr < 16 || (m > 0 && grid.nz < 16)};
  return res;
}

/// Weighted-L2 relative residual of the strong-form eigenrelation
///   L_v phi = alpha |y|^-1 v^{p1*-2} phi
/// over interior nodes.  The outer three stencil layers per axis are
/// excluded: their one-sided windows on hugely stretched cells produce
/// boundary noise that the vanishing weight then amplifies, which says
/// nothing about how well the equation is satisfied where the mass lives.
inline double strong_residual_weighted(const Params& params, const Grid& grid,
                                       const ExtremalParams& theta, const Field& phi,
                                       double alpha) {
  Field lv = apply_linearized_strong(params, grid, theta, phi).field;
  Field v = extremal_field(params, grid, theta);
  std::vector<double> num(grid.size(), 0.0), den(grid.size(), 0.0);
  const int skirt = 3;
  for (std::size_t q = 0; q < grid.size(); ++q) {
    const int ir = grid.r_index(q);
    if (ir >= grid.nr - skirt) continue;
    bool boundary = false;
    for (int a = 0; a < params.m; ++a) {
      const int iz = grid.z_index(q, a);
      if (iz < skirt || iz >= grid.nz - skirt) boundary = true;
    }
    if (boundary) continue;
    const double w = std::pow(std::abs(v.values[q]), params.p1_star - 2.0) / grid.r_of(q);
    const double target = alpha * w * phi.values[q];
    const double rho = (lv.values[q] - target) / w;
    num[q] = w * rho * rho;
    den[q] = w * (alpha * phi.values[q]) * (alpha * phi.values[q]);
  }
  return std::sqrt(integrate(grid, num) / integrate(grid, den));
}

struct GapEstimate {
  double lambda_hat = 0.0;
  double alpha2 = 0.0;          // first eigenvalue of the E2 cluster
  double next_eigenvalue = 0.0; // first eigenvalue strictly above the cluster
  double separation_ratio = 0.0;
  int cluster_size = 0;
};

/// Discrete surrogate of the spectral-gap constant: half the distance from
/// the E2 cluster to the next eigenvalue above it.
inline GapEstimate spectral_gap_estimate(const Params& params, const SpectralResult& result,
                                         double cluster_tol = 0.05) {
  const int m = params.m;
  if (static_cast<int>(result.eigenvalues.size()) < m + 3)
    throw std::invalid_argument("spectral_gap_estimate: need at least m+3 eigenpairs");
  GapEstimate g;
  g.alpha2 = result.eigenvalues[1];
  int idx = 1;
  while (idx + 1 < static_cast<int>(result.eigenvalues.size()) &&
         result.eigenvalues[static_cast<std::size_t>(idx + 1)] <=
             g.alpha2 * (1.0 + cluster_tol))
    ++idx;
  g.cluster_size = idx;  // eigenvalues 1..idx form the cluster
  if (idx + 1 >= static_cast<int>(result.eigenvalues.size())) {
    std::string list;
    for (double e : result.eigenvalues) list += std::to_string(e) + " ";
    throw std::runtime_error("spectral_gap_estimate: no eigenvalue above the E2 cluster: " + list);
  }
  g.next_eigenvalue = result.eigenvalues[static_cast<std::size_t>(idx + 1)];
  g.separation_ratio = g.next_eigenvalue / g.alpha2;
  if (g.separation_ratio < 1.0 + cluster_tol) {
    std::string list;
    for (double e : result.eigenvalues) list += std::to_string(e) + " ";
    throw std::runtime_error("spectral_gap_estimate: cluster not separated: " + list);
  }
  g.lambda_hat = 0.5 * (g.next_eigenvalue - g.alpha2);
  return g;
}

}  // namespace hsm
