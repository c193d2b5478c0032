#pragma once

// Trigonometric quadrature on 2M equispaced nodes for the single-layer
// systems: Kress log-weights R, cotangent weights S, the parametrized kernel
// splits, and block assembly of the three boundary systems. One matrix block
// per Laguerre-order offset d; the order-n equation reuses block 0 as its
// operator and blocks 1..n against the density history.
//
// Conventions baked in throughout: curves counter-clockwise, normal
// (x2', -x1')/|x'| (outward for the annulus on the outer curve, into the
// annulus on the inner one), columns ordered [curve-1 nodes | curve-2 nodes]
// node-major component-minor, and the traction jump w = 1/(2|x'|) added on
// the self-curve diagonal of every order-offset block, since the kernel
// singularity strength is order-independent.

#include <cmath>
#include <limits>
#include <vector>

#include "lagbem/fundamental.hpp"
#include "lagbem/geometry.hpp"
#include "lagbem/types.hpp"

namespace lagbem {

template <class Scalar>
struct NystromGrid {
  int M = 0;
  std::vector<Scalar> nodes;     // s_j = j pi / M, j = 0..2M-1
  std::vector<Scalar> weight_r;  // R_j(s_i) by offset d = (j - i) mod 2M
  std::vector<Scalar> weight_s;  // S_j(s_i) by offset, zero at even offsets

  static NystromGrid make(int M);
};

// R_k(s) = -(1/2M) (1 + 2 sum_{m=1}^{M-1} cos(m(s - s_k))/m + cos(M(s - s_k))/M).
template <class Scalar>
Scalar weight_R(int k, Scalar s, int M) {
  using std::cos;
  const Scalar d = s - Scalar(k) * Scalar(EIGEN_PI) / Scalar(M);
  Scalar acc(1);
  for (int m = 1; m < M; ++m) acc += Scalar(2) / Scalar(m) * cos(Scalar(m) * d);
  acc -= cos(Scalar(M) * d) / Scalar(M);
  return -acc / Scalar(2 * M);
}

// S_k(s) = (1/2M) (1 - (-1)^k cos(M s)) cot((s_k - s)/2), with S_k(s_k) = 0.
template <class Scalar>
Scalar weight_S(int k, Scalar s, int M) {
  using std::cos;
  using std::tan;
  const Scalar sk = Scalar(k) * Scalar(EIGEN_PI) / Scalar(M);
  const Scalar half = (sk - s) / Scalar(2);
  if (tan(half) == Scalar(0)) return Scalar(0);
  const Scalar sign = k % 2 == 0 ? Scalar(1) : Scalar(-1);
  return (Scalar(1) - sign * cos(Scalar(M) * s)) / (Scalar(2 * M) * tan(half));
}

template <class Scalar>
NystromGrid<Scalar> NystromGrid<Scalar>::make(int M) {
  if (M < 2) throw ValidationError("M", "at least 2 nodes per half-period required");
  NystromGrid<Scalar> g;
  g.M = M;
  const int n = 2 * M;
  g.nodes.resize(n);
  g.weight_r.resize(n);
  g.weight_s.assign(n, Scalar(0));
  using std::cos;
  using std::tan;
  for (int j = 0; j < n; ++j) g.nodes[j] = Scalar(j) * Scalar(EIGEN_PI) / Scalar(M);
  for (int d = 0; d < n; ++d) {
    const Scalar ang = Scalar(d) * Scalar(EIGEN_PI) / Scalar(M);
    Scalar acc(1);
    for (int m = 1; m < M; ++m) acc += Scalar(2) / Scalar(m) * cos(Scalar(m) * ang);
    acc -= cos(Scalar(M) * ang) / Scalar(M);
    g.weight_r[d] = -acc / Scalar(2 * M);
    if (d % 2 == 1) g.weight_s[d] = Scalar(1) / (Scalar(M) * tan(Scalar(d) * Scalar(EIGEN_PI) / Scalar(2 * M)));
  }
  return g;
}

// ln(4/e sin^2((s - sigma)/2)): the part of ln|x(s) - x(sigma)|^2 the
// R-weights integrate exactly.
template <class Scalar>
Scalar log_term(Scalar s, Scalar sigma) {
  using std::exp;
  using std::log;
  using std::sin;
  const Scalar h = sin((s - sigma) / Scalar(2));
  return log(Scalar(4) / exp(Scalar(1)) * h * h);
}

template <class Scalar>
struct CurveNodes {
  std::vector<Vec2<Scalar>> x, dx, ddx, nu;
  std::vector<Scalar> speed;
};

template <class Scalar>
CurveNodes<Scalar> curve_nodes(const ParametricCurve<Scalar>& curve, const NystromGrid<Scalar>& grid) {
  CurveNodes<Scalar> out;
  const size_t n = grid.nodes.size();
  out.x.resize(n);
  out.dx.resize(n);
  out.ddx.resize(n);
  out.nu.resize(n);
  out.speed.resize(n);
  for (size_t j = 0; j < n; ++j) {
    out.x[j] = curve.point(grid.nodes[j]);
    out.dx[j] = curve.first_derivative(grid.nodes[j]);
    out.ddx[j] = curve.second_derivative(grid.nodes[j]);
    out.speed[j] = out.dx[j].norm();
    if (!(out.speed[j] > Scalar(0))) throw ValidationError("curve", "degenerate parametrization (|x'| = 0)");
    out.nu[j] = Vec2<Scalar>(out.dx[j](1), -out.dx[j](0)) / out.speed[j];
  }
  return out;
}

template <class Scalar>
struct AnnulusGeometry {
  ParametricCurve<Scalar> gamma1, gamma2;  // inner, outer
};

enum class SystemKind { cauchy, direct_neumann, direct_dirichlet };

template <class Scalar>
struct DiscreteSystem {
  SystemKind kind = SystemKind::cauchy;
  int M = 0;
  int n_orders = 0;                  // blocks for offsets 0..n_orders
  std::vector<MatX<Scalar>> blocks;  // each 8M x 8M

  const MatX<Scalar>& matrix() const { return blocks.front(); }
};

// Densities by order; each vector is 8M long, [curve-1 | curve-2] node-major.
template <class Scalar>
struct DensitySet {
  int M = 0;
  std::vector<VecX<Scalar>> orders;

  Vec2<Scalar> at(int n, int curve, int node) const {
    const int base = (curve - 1) * 4 * M + 2 * node;
    return Vec2<Scalar>(orders[static_cast<size_t>(n)](base), orders[static_cast<size_t>(n)](base + 1));
  }
};

namespace detail {

template <class Scalar, class Derived>
void scatter(MatX<Scalar>& A, Eigen::Index row0, Eigen::Index col0, const Eigen::MatrixBase<Derived>& blk) {
  A.template block<2, 2>(row0, col0) += blk;
}

// Order-independent diagonal data of the traction kernel on one curve.
template <class Scalar>
struct TractionDiagonal {
  std::vector<Mat2<Scalar>> q2;   // cotangent coefficient Q^{,2}(s_i)
  std::vector<Mat2<Scalar>> q3d;  // smooth remainder Q^{,3}(s_i, s_i)
  std::vector<Scalar> jump;       // 1/(2 |x'(s_i)|)
};

template <class Scalar>
TractionDiagonal<Scalar> traction_diagonal(const ParametricCurve<Scalar>& curve,
                                           const NystromGrid<Scalar>& grid,
                                           const MaterialTables<Scalar>& mt, bool flip) {
  const auto lim1 = limits_at_zero(mt, 1, 0);
  const auto lim2 = limits_at_zero(mt, 2, 0);
  const Scalar xit1 = lim1.xi_tilde;  // order-independent
  const Scalar xi2 = lim2.xi;
  TractionDiagonal<Scalar> out;
  const size_t n = grid.nodes.size();
  out.q2.resize(n);
  out.q3d.resize(n);
  out.jump.resize(n);
  for (size_t i = 0; i < n; ++i) {
    const Scalar s = grid.nodes[i];
    auto lm = curve_local_matrices(curve, s, mt.params);
    const Vec2<Scalar> t = curve.first_derivative(s);
    const Vec2<Scalar> a = curve.second_derivative(s);
    const Scalar t2 = t.squaredNorm();
    if (flip) {
      // All U matrices are linear in nu.
      lm.Ut1 = -lm.Ut1;
      lm.Ut2 = -lm.Ut2;
      lm.Uh1 = -lm.Uh1;
      lm.Uh2 = -lm.Uh2;
    }
    out.q2[i] = -(xit1 * lm.Ut1 + xi2 * lm.Ut2) / (Scalar(2) * t2);
    const Scalar fac = Scalar(2) * t.dot(a) / t2;
    out.q3d[i] = -(xit1 * (lm.Uh1 - fac * lm.Ut1) + xi2 * (lm.Uh2 - fac * lm.Ut2)) / (Scalar(2) * t2);
    using std::sqrt;
    out.jump[i] = Scalar(1) / (Scalar(2) * sqrt(t2));
  }
  return out;
}

// Self-curve contributions: optional single-layer rows (row_h >= 0) and
// traction rows (row_q >= 0), columns at col0. Blocks must be pre-sized.
template <class Scalar>
void fill_self(std::vector<MatX<Scalar>>& blocks, const MaterialTables<Scalar>& mt,
               const NystromGrid<Scalar>& grid, const ParametricCurve<Scalar>& curve,
               const CurveNodes<Scalar>& nd, Eigen::Index row_h, Eigen::Index row_q,
               Eigen::Index col0, bool flip) {
  const int n2 = 2 * grid.M;
  const int N = static_cast<int>(blocks.size()) - 1;
  const Scalar inv2m = Scalar(1) / Scalar(2 * grid.M);
  const Mat2<Scalar> I = Mat2<Scalar>::Identity();
  TractionDiagonal<Scalar> diag;
  if (row_q >= 0) diag = traction_diagonal(curve, grid, mt, flip);
  const auto lim2 = limits_at_zero(mt, 2, 0);
  for (int i = 0; i < n2; ++i) {
    const Vec2<Scalar> xi = nd.x[static_cast<size_t>(i)];
    const Vec2<Scalar> nu = flip ? Vec2<Scalar>(-nd.nu[static_cast<size_t>(i)])
                                 : nd.nu[static_cast<size_t>(i)];
    for (int j = 0; j < n2; ++j) {
      if (j == i) continue;
      const Vec2<Scalar> d = xi - nd.x[static_cast<size_t>(j)];
      const Scalar r2 = d.squaredNorm();
      using std::sqrt;
      using std::tan;
      PairContext<Scalar> ctx(mt, sqrt(r2));
      const Mat2<Scalar> J = matrix_J(d);
      const Scalar lt = log_term(grid.nodes[static_cast<size_t>(i)], grid.nodes[static_cast<size_t>(j)]);
      const Scalar wr = grid.weight_r[static_cast<size_t>((j - i + n2) % n2)];
      const Scalar ws = grid.weight_s[static_cast<size_t>((j - i + n2) % n2)];
      const Scalar ct =
          Scalar(1) / tan((grid.nodes[static_cast<size_t>(j)] - grid.nodes[static_cast<size_t>(i)]) / Scalar(2));
      Mat2<Scalar> U1, U2;
      if (row_q >= 0) {
        U1 = matrix_U(1, xi, nd.x[static_cast<size_t>(j)], nu, mt.params);
        U2 = matrix_U(2, xi, nd.x[static_cast<size_t>(j)], nu, mt.params);
      }
      for (int dd = 0; dd <= N; ++dd) {
        const auto l1 = ctx.layer(1, dd);
        const auto l2 = ctx.layer(2, dd);
        if (row_h >= 0) {
          const Mat2<Scalar> H1 = Scalar(0.5) * (l1.log_factor * I + l2.log_factor * J);
          const Mat2<Scalar> Hf = l1.full * I + l2.full * J;
          scatter(blocks[static_cast<size_t>(dd)], row_h + 2 * i, col0 + 2 * j, wr * H1 + (Hf - lt * H1) * inv2m);
        }
        if (row_q >= 0) {
          const auto t1 = ctx.layer_tilde(1, dd);
          const auto t2 = ctx.layer_tilde(2, dd);
          const Mat2<Scalar> Qf = (U1 * (t1.full * I + t2.full * J) + l2.full * U2) / r2;
          const Mat2<Scalar> Q1 =
              Scalar(0.5) * (U1 * (t1.log_factor * I + t2.log_factor * J) + l2.log_factor * U2) / r2;
          const Mat2<Scalar>& Q2 = diag.q2[static_cast<size_t>(i)];
          const Mat2<Scalar> Q3 = Qf - lt * Q1 - ct * Q2;
          scatter(blocks[static_cast<size_t>(dd)], row_q + 2 * i, col0 + 2 * j, wr * Q1 + ws * Q2 + Q3 * inv2m);
        }
      }
    }
    // diagonal entries
    const Scalar sp2 = nd.speed[static_cast<size_t>(i)] * nd.speed[static_cast<size_t>(i)];
    const Mat2<Scalar> Jt = nd.dx[static_cast<size_t>(i)] * nd.dx[static_cast<size_t>(i)].transpose() / sp2;
    using std::exp;
    using std::log;
    for (int dd = 0; dd <= N; ++dd) {
      if (row_h >= 0) {
        const auto lim1 = limits_at_zero(mt, 1, dd);
        const Mat2<Scalar> H1d = Scalar(0.5) * lim1.eta * I;
        const Mat2<Scalar> H2d =
            Scalar(0.5) * log(sp2 * exp(Scalar(1))) * lim1.eta * I + lim1.xi * I + lim2.xi * Jt;
        scatter(blocks[static_cast<size_t>(dd)], row_h + 2 * i, col0 + 2 * i,
                grid.weight_r[0] * H1d + H2d * inv2m);
      }
      if (row_q >= 0)
        scatter(blocks[static_cast<size_t>(dd)], row_q + 2 * i, col0 + 2 * i,
                diag.q3d[static_cast<size_t>(i)] * inv2m);
    }
  }
}

// Cross-curve contributions: smooth kernels, plain trapezoid weight 1/(2M).
template <class Scalar>
void fill_cross(std::vector<MatX<Scalar>>& blocks, const MaterialTables<Scalar>& mt,
                const CurveNodes<Scalar>& row_nodes, const CurveNodes<Scalar>& col_nodes,
                Eigen::Index row0, Eigen::Index col0, bool traction, bool flip) {
  const int n_rows = static_cast<int>(row_nodes.x.size());
  const int n_cols = static_cast<int>(col_nodes.x.size());
  const int N = static_cast<int>(blocks.size()) - 1;
  const Scalar inv2m = Scalar(1) / Scalar(n_cols);
  const Mat2<Scalar> I = Mat2<Scalar>::Identity();
  for (int i = 0; i < n_rows; ++i) {
    const Vec2<Scalar> xi = row_nodes.x[static_cast<size_t>(i)];
    const Vec2<Scalar> nu =
        flip ? Vec2<Scalar>(-row_nodes.nu[static_cast<size_t>(i)]) : row_nodes.nu[static_cast<size_t>(i)];
    for (int j = 0; j < n_cols; ++j) {
      const Vec2<Scalar> d = xi - col_nodes.x[static_cast<size_t>(j)];
      const Scalar r2 = d.squaredNorm();
      using std::sqrt;
      PairContext<Scalar> ctx(mt, sqrt(r2));
      const Mat2<Scalar> J = matrix_J(d);
      Mat2<Scalar> U1, U2;
      if (traction) {
        U1 = matrix_U(1, xi, col_nodes.x[static_cast<size_t>(j)], nu, mt.params);
        U2 = matrix_U(2, xi, col_nodes.x[static_cast<size_t>(j)], nu, mt.params);
      }
      for (int dd = 0; dd <= N; ++dd) {
        const auto l1 = ctx.layer(1, dd);
        const auto l2 = ctx.layer(2, dd);
        Mat2<Scalar> blk;
        if (!traction) {
          blk = l1.full * I + l2.full * J;
        } else {
          const auto t1 = ctx.layer_tilde(1, dd);
          const auto t2 = ctx.layer_tilde(2, dd);
          blk = (U1 * (t1.full * I + t2.full * J) + l2.full * U2) / r2;
        }
        scatter(blocks[static_cast<size_t>(dd)], row0 + 2 * i, col0 + 2 * j, blk * inv2m);
      }
    }
  }
}

}  // namespace detail

// Pointwise parametrized kernels for one (row-curve, column-curve) pair;
// row curve index ell, column curve index k, both in {1, 2}. For the
// self-curve case the split is against the Kress log term
// ln(4/e sin^2((s-sigma)/2)); cross-curve kernels are smooth (log and cot
// parts zero). On the diagonal s = sigma the full value does not exist and is
// returned as NaN.
template <class Scalar>
SplitMatrix<Scalar> kernel_H(int ell, int k, int n, Scalar s, Scalar sigma,
                             const AnnulusGeometry<Scalar>& geom, const MaterialTables<Scalar>& mt) {
  if ((ell != 1 && ell != 2) || (k != 1 && k != 2)) throw std::domain_error("kernel_H: curve index must be 1 or 2");
  const auto& row_curve = ell == 1 ? geom.gamma1 : geom.gamma2;
  const auto& col_curve = k == 1 ? geom.gamma1 : geom.gamma2;
  const Vec2<Scalar> x = row_curve.point(s);
  const Vec2<Scalar> y = col_curve.point(sigma);
  const Mat2<Scalar> I = Mat2<Scalar>::Identity();
  SplitMatrix<Scalar> out;
  if (ell != k) {
    out.full = fundamental_matrix(n, x, y, mt).full;
    out.log_part = Mat2<Scalar>::Zero();
    out.smooth = out.full;
    return out;
  }
  const Vec2<Scalar> d = x - y;
  if (d.squaredNorm() > Scalar(0)) {
    PairContext<Scalar> ctx(mt, d.norm());
    const auto l1 = ctx.layer(1, n);
    const auto l2 = ctx.layer(2, n);
    const Mat2<Scalar> J = matrix_J(d);
    out.full = l1.full * I + l2.full * J;
    out.log_part = Scalar(0.5) * (l1.log_factor * I + l2.log_factor * J);
    out.smooth = out.full - log_term(s, sigma) * out.log_part;
    return out;
  }
  const Vec2<Scalar> t = row_curve.first_derivative(s);
  const Scalar t2 = t.squaredNorm();
  if (!(t2 > Scalar(0))) throw ValidationError("curve", "degenerate parametrization (|x'| = 0)");
  const auto lim1 = limits_at_zero(mt, 1, n);
  const auto lim2 = limits_at_zero(mt, 2, 0);
  using std::exp;
  using std::log;
  out.log_part = Scalar(0.5) * lim1.eta * I;
  out.smooth = Scalar(0.5) * log(t2 * exp(Scalar(1))) * lim1.eta * I + lim1.xi * I +
               lim2.xi * (t * t.transpose() / t2);
  out.full = Mat2<Scalar>::Constant(std::numeric_limits<Scalar>::quiet_NaN());
  return out;
}

// Traction kernel split: full = log_term * log_part + cot((sigma-s)/2) *
// cot_part + smooth off the diagonal of a single curve.
template <class Scalar>
struct TractionKernelSplit {
  Mat2<Scalar> full, log_part, cot_part, smooth;
};

template <class Scalar>
TractionKernelSplit<Scalar> kernel_Q(int ell, int k, int n, Scalar s, Scalar sigma,
                                     const AnnulusGeometry<Scalar>& geom, const MaterialTables<Scalar>& mt) {
  if ((ell != 1 && ell != 2) || (k != 1 && k != 2)) throw std::domain_error("kernel_Q: curve index must be 1 or 2");
  const auto& row_curve = ell == 1 ? geom.gamma1 : geom.gamma2;
  const auto& col_curve = k == 1 ? geom.gamma1 : geom.gamma2;
  const Vec2<Scalar> x = row_curve.point(s);
  const Vec2<Scalar> nu = outward_normal(row_curve, s);
  const Vec2<Scalar> y = col_curve.point(sigma);
  TractionKernelSplit<Scalar> out;
  out.log_part = Mat2<Scalar>::Zero();
  out.cot_part = Mat2<Scalar>::Zero();
  if (ell != k) {
    out.full = traction_matrix(n, x, y, nu, mt).full;
    out.smooth = out.full;
    return out;
  }
  const Vec2<Scalar> d = x - y;
  const Vec2<Scalar> t = row_curve.first_derivative(s);
  const Vec2<Scalar> a = row_curve.second_derivative(s);
  const Scalar t2 = t.squaredNorm();
  if (!(t2 > Scalar(0))) throw ValidationError("curve", "degenerate parametrization (|x'| = 0)");
  auto lm = curve_local_matrices(row_curve, s, mt.params);
  const Scalar xit1 = limits_at_zero(mt, 1, 0).xi_tilde;
  const Scalar xi2 = limits_at_zero(mt, 2, 0).xi;
  out.cot_part = -(xit1 * lm.Ut1 + xi2 * lm.Ut2) / (Scalar(2) * t2);
  if (d.squaredNorm() > Scalar(0)) {
    const auto split = traction_matrix(n, x, y, nu, mt);
    using std::tan;
    out.full = split.full;
    out.log_part = Scalar(0.5) * split.log_part;
    out.smooth = out.full - log_term(s, sigma) * out.log_part -
                 Scalar(1) / tan((sigma - s) / Scalar(2)) * out.cot_part;
    return out;
  }
  const Scalar fac = Scalar(2) * t.dot(a) / t2;
  out.smooth = -(xit1 * (lm.Uh1 - fac * lm.Ut1) + xi2 * (lm.Uh2 - fac * lm.Ut2)) / (Scalar(2) * t2);
  out.full = Mat2<Scalar>::Constant(std::numeric_limits<Scalar>::quiet_NaN());
  return out;
}

// ---- system assembly ----

template <class Scalar>
DiscreteSystem<Scalar> assemble_cauchy(const AnnulusGeometry<Scalar>& geom, const NystromGrid<Scalar>& grid,
                                       const MaterialTables<Scalar>& mt, int n_orders) {
  if (n_orders < 0 || n_orders > mt.n_orders)
    throw ValidationError("N", "order count outside material tables");
  const int n4 = 4 * grid.M;
  DiscreteSystem<Scalar> sys{SystemKind::cauchy, grid.M, n_orders, {}};
  sys.blocks.assign(static_cast<size_t>(n_orders) + 1, MatX<Scalar>::Zero(2 * n4, 2 * n4));
  const auto nd1 = curve_nodes(geom.gamma1, grid);
  const auto nd2 = curve_nodes(geom.gamma2, grid);
  // Rows: [u-trace on curve 2; traction-trace on curve 2].
  detail::fill_cross(sys.blocks, mt, nd2, nd1, 0, 0, /*traction=*/false, /*flip=*/false);
  detail::fill_cross(sys.blocks, mt, nd2, nd1, n4, 0, /*traction=*/true, /*flip=*/false);
  detail::fill_self(sys.blocks, mt, grid, geom.gamma2, nd2, /*row_h=*/0, /*row_q=*/n4, /*col0=*/n4,
                    /*flip=*/false);
  for (int i = 0; i < 2 * grid.M; ++i) {
    const Scalar w = Scalar(1) / (Scalar(2) * nd2.speed[static_cast<size_t>(i)]);
    for (auto& b : sys.blocks) {
      b(n4 + 2 * i, n4 + 2 * i) += w;
      b(n4 + 2 * i + 1, n4 + 2 * i + 1) += w;
    }
  }
  return sys;
}

template <class Scalar>
DiscreteSystem<Scalar> assemble_direct_neumann(const AnnulusGeometry<Scalar>& geom,
                                               const NystromGrid<Scalar>& grid,
                                               const MaterialTables<Scalar>& mt, int n_orders) {
  if (n_orders < 0 || n_orders > mt.n_orders)
    throw ValidationError("N", "order count outside material tables");
  const int n4 = 4 * grid.M;
  DiscreteSystem<Scalar> sys{SystemKind::direct_neumann, grid.M, n_orders, {}};
  sys.blocks.assign(static_cast<size_t>(n_orders) + 1, MatX<Scalar>::Zero(2 * n4, 2 * n4));
  const auto nd1 = curve_nodes(geom.gamma1, grid);
  const auto nd2 = curve_nodes(geom.gamma2, grid);
  // Rows: [traction on curve 1; traction on curve 2], unflipped normals; the
  // annulus-interior limit carries jump -w on curve 1 and +w on curve 2.
  detail::fill_self(sys.blocks, mt, grid, geom.gamma1, nd1, -1, 0, 0, /*flip=*/false);
  detail::fill_cross(sys.blocks, mt, nd1, nd2, 0, n4, /*traction=*/true, /*flip=*/false);
  detail::fill_cross(sys.blocks, mt, nd2, nd1, n4, 0, /*traction=*/true, /*flip=*/false);
  detail::fill_self(sys.blocks, mt, grid, geom.gamma2, nd2, -1, n4, n4, /*flip=*/false);
  for (int i = 0; i < 2 * grid.M; ++i) {
    const Scalar w1 = Scalar(1) / (Scalar(2) * nd1.speed[static_cast<size_t>(i)]);
    const Scalar w2 = Scalar(1) / (Scalar(2) * nd2.speed[static_cast<size_t>(i)]);
    for (auto& b : sys.blocks) {
      b(2 * i, 2 * i) -= w1;
      b(2 * i + 1, 2 * i + 1) -= w1;
      b(n4 + 2 * i, n4 + 2 * i) += w2;
      b(n4 + 2 * i + 1, n4 + 2 * i + 1) += w2;
    }
  }
  return sys;
}

template <class Scalar>
DiscreteSystem<Scalar> assemble_direct_dirichlet(const AnnulusGeometry<Scalar>& geom,
                                                 const NystromGrid<Scalar>& grid,
                                                 const MaterialTables<Scalar>& mt, int n_orders) {
  if (n_orders < 0 || n_orders > mt.n_orders)
    throw ValidationError("N", "order count outside material tables");
  const int n4 = 4 * grid.M;
  DiscreteSystem<Scalar> sys{SystemKind::direct_dirichlet, grid.M, n_orders, {}};
  sys.blocks.assign(static_cast<size_t>(n_orders) + 1, MatX<Scalar>::Zero(2 * n4, 2 * n4));
  const auto nd1 = curve_nodes(geom.gamma1, grid);
  const auto nd2 = curve_nodes(geom.gamma2, grid);
  detail::fill_self(sys.blocks, mt, grid, geom.gamma1, nd1, 0, -1, 0, /*flip=*/false);
  detail::fill_cross(sys.blocks, mt, nd1, nd2, 0, n4, /*traction=*/false, /*flip=*/false);
  detail::fill_cross(sys.blocks, mt, nd2, nd1, n4, 0, /*traction=*/false, /*flip=*/false);
  detail::fill_self(sys.blocks, mt, grid, geom.gamma2, nd2, n4, -1, n4, /*flip=*/false);
  return sys;
}

// Right-hand side at order n: the given data minus the history contributions
// of the already-solved densities through the order-offset blocks (this is
// where the accumulated jump terms -(1/(2|x'|)) sum psi_m come from).
template <class Scalar>
VecX<Scalar> history_rhs(int n, const VecX<Scalar>& data_n, const DensitySet<Scalar>& densities,
                         const DiscreteSystem<Scalar>& sys) {
  if (n < 0 || n > sys.n_orders) throw std::domain_error("history_rhs: order outside system blocks");
  VecX<Scalar> rhs = data_n;
  for (int d = 1; d <= n; ++d) rhs -= sys.blocks[static_cast<size_t>(d)] * densities.orders[static_cast<size_t>(n - d)];
  return rhs;
}

template <class Scalar>
VecX<Scalar> cauchy_rhs(int n, const VecX<Scalar>& data_n, const DensitySet<Scalar>& densities,
                        const DiscreteSystem<Scalar>& sys) {
  return history_rhs(n, data_n, densities, sys);
}

template <class Scalar>
VecX<Scalar> direct_rhs(int n, const VecX<Scalar>& data_n, const DensitySet<Scalar>& densities,
                        const DiscreteSystem<Scalar>& sys) {
  return history_rhs(n, data_n, densities, sys);
}

// Boundary evaluation operator: per-offset 4M x 8M blocks mapping the stacked
// densities to a trace on one curve. The order-n value convolves the blocks
// against the density history, so any jump term baked into the blocks applies
// to every contributing density.
template <class Scalar>
struct BoundaryOperator {
  int M = 0;
  int n_orders = 0;
  std::vector<MatX<Scalar>> blocks;

  VecX<Scalar> apply(int n, const DensitySet<Scalar>& densities) const {
    if (n < 0 || n > n_orders) throw std::domain_error("BoundaryOperator: order outside blocks");
    VecX<Scalar> out = VecX<Scalar>::Zero(blocks.front().rows());
    for (int m = 0; m <= n; ++m)
      out += blocks[static_cast<size_t>(n - m)] * densities.orders[static_cast<size_t>(m)];
    return out;
  }
};

// Displacement trace on curve 1 or 2.
template <class Scalar>
BoundaryOperator<Scalar> trace_operator(int curve, const AnnulusGeometry<Scalar>& geom,
                                        const NystromGrid<Scalar>& grid, const MaterialTables<Scalar>& mt,
                                        int n_orders) {
  if (curve != 1 && curve != 2) throw std::domain_error("trace_operator: curve index must be 1 or 2");
  if (n_orders < 0 || n_orders > mt.n_orders)
    throw ValidationError("N", "order count outside material tables");
  const int n4 = 4 * grid.M;
  BoundaryOperator<Scalar> op{grid.M, n_orders, {}};
  op.blocks.assign(static_cast<size_t>(n_orders) + 1, MatX<Scalar>::Zero(n4, 2 * n4));
  const auto nd1 = curve_nodes(geom.gamma1, grid);
  const auto nd2 = curve_nodes(geom.gamma2, grid);
  const auto& self = curve == 1 ? geom.gamma1 : geom.gamma2;
  const auto& nds = curve == 1 ? nd1 : nd2;
  const auto& ndo = curve == 1 ? nd2 : nd1;
  const Eigen::Index col_self = curve == 1 ? 0 : n4;
  const Eigen::Index col_other = curve == 1 ? n4 : 0;
  detail::fill_self(op.blocks, mt, grid, self, nds, /*row_h=*/0, /*row_q=*/-1, col_self, /*flip=*/false);
  detail::fill_cross(op.blocks, mt, nds, ndo, 0, col_other, /*traction=*/false, /*flip=*/false);
  return op;
}

// Traction trace on curve 1 or 2. `flip` negates the parametrization normal
// (x2', -x1')/|x'|; `jump_sign` times 1/(2|x'|) is added on the self-curve
// diagonal of every block, matching the one-sided limit being taken.
template <class Scalar>
BoundaryOperator<Scalar> traction_operator(int curve, bool flip, Scalar jump_sign,
                                           const AnnulusGeometry<Scalar>& geom, const NystromGrid<Scalar>& grid,
                                           const MaterialTables<Scalar>& mt, int n_orders) {
  if (curve != 1 && curve != 2) throw std::domain_error("traction_operator: curve index must be 1 or 2");
  if (n_orders < 0 || n_orders > mt.n_orders)
    throw ValidationError("N", "order count outside material tables");
  const int n4 = 4 * grid.M;
  BoundaryOperator<Scalar> op{grid.M, n_orders, {}};
  op.blocks.assign(static_cast<size_t>(n_orders) + 1, MatX<Scalar>::Zero(n4, 2 * n4));
  const auto nd1 = curve_nodes(geom.gamma1, grid);
  const auto nd2 = curve_nodes(geom.gamma2, grid);
  const auto& self = curve == 1 ? geom.gamma1 : geom.gamma2;
  const auto& nds = curve == 1 ? nd1 : nd2;
  const auto& ndo = curve == 1 ? nd2 : nd1;
  const Eigen::Index col_self = curve == 1 ? 0 : n4;
  const Eigen::Index col_other = curve == 1 ? n4 : 0;
  detail::fill_self(op.blocks, mt, grid, self, nds, /*row_h=*/-1, /*row_q=*/0, col_self, flip);
  detail::fill_cross(op.blocks, mt, nds, ndo, 0, col_other, /*traction=*/true, flip);
  for (int i = 0; i < 2 * grid.M; ++i) {
    const Scalar w = jump_sign / (Scalar(2) * nds.speed[static_cast<size_t>(i)]);
    for (auto& b : op.blocks) {
      b(2 * i, col_self + 2 * i) += w;
      b(2 * i + 1, col_self + 2 * i + 1) += w;
    }
  }
  return op;
}

}  // namespace lagbem
