#pragma once

// Sequence solver for the order-marched boundary systems: one factorization
// of block 0, reused across all orders; spectral filtering (Tikhonov and/or
// relative rank truncation) for the ill-posed two-sided system; optional
// trigonometric bandwidth projection of each solved density as a stabilizer;
// reproducible Gaussian data noise.

#include <cmath>
#include <cstdint>
#include <iostream>
#include <random>
#include <vector>

#include "lagbem/nystrom.hpp"
#include "lagbem/types.hpp"

namespace lagbem {

template <class Scalar>
struct TikhonovConfig {
  Scalar alpha = Scalar(0);     // Tikhonov parameter; 0 = plain (pseudo-)inverse
  Scalar rank_tol = Scalar(0);  // drop singular values below rank_tol * sigma_max
  int bandwidth = 0;            // keep Fourier modes |m| <= bandwidth per density; 0 = off
};

template <class Scalar>
struct SolveReport {
  Eigen::Index rank = 0;  // retained singular values
  Scalar sigma_max = Scalar(0);
  Scalar sigma_min = Scalar(0);  // smallest retained
  bool truncated = false;
};

template <class Scalar>
class SequenceSolver {
 public:
  SequenceSolver(const MatX<Scalar>& A, const TikhonovConfig<Scalar>& cfg) : cfg_(cfg) {
    if (cfg.alpha < Scalar(0)) throw ValidationError("alpha", "must be non-negative");
    if (cfg.rank_tol < Scalar(0) || cfg.rank_tol >= Scalar(1))
      throw ValidationError("rank_tol", "must lie in [0, 1)");
    if (cfg.alpha == Scalar(0) && cfg.rank_tol == Scalar(0)) {
      lu_.compute(A);
      use_lu_ = true;
      return;
    }
    svd_.compute(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd_.singularValues();
    report_.sigma_max = sv.size() ? sv(0) : Scalar(0);
    const Scalar cut = cfg.rank_tol * report_.sigma_max;
    rank_ = 0;
    while (rank_ < sv.size() && sv(rank_) > cut) ++rank_;
    report_.rank = rank_;
    report_.sigma_min = rank_ ? sv(rank_ - 1) : Scalar(0);
    report_.truncated = rank_ < sv.size();
    if (cfg.alpha == Scalar(0) && report_.truncated)
      std::cerr << "rank warning: pseudo-inverse dropped " << (sv.size() - rank_)
                << " singular values below " << cut << "\n";
  }

  VecX<Scalar> solve(const VecX<Scalar>& b) const {
    if (use_lu_) return lu_.solve(b);
    const auto& sv = svd_.singularValues();
    VecX<Scalar> c = svd_.matrixU().leftCols(rank_).transpose() * b;
    for (Eigen::Index i = 0; i < rank_; ++i) {
      const Scalar s = sv(i);
      c(i) *= cfg_.alpha == Scalar(0) ? Scalar(1) / s : s / (s * s + cfg_.alpha);
    }
    return svd_.matrixV().leftCols(rank_) * c;
  }

  const SolveReport<Scalar>& report() const { return report_; }

 private:
  TikhonovConfig<Scalar> cfg_;
  bool use_lu_ = false;
  Eigen::PartialPivLU<MatX<Scalar>> lu_;
  Eigen::BDCSVD<MatX<Scalar>> svd_;
  Eigen::Index rank_ = 0;
  SolveReport<Scalar> report_;
};

template <class Scalar>
VecX<Scalar> tikhonov_solve(const MatX<Scalar>& A, const VecX<Scalar>& b, Scalar alpha,
                            Scalar rank_tol = Scalar(0), SolveReport<Scalar>* report = nullptr) {
  SequenceSolver<Scalar> solver(A, TikhonovConfig<Scalar>{alpha, rank_tol, 0});
  VecX<Scalar> x = solver.solve(b);
  if (report) *report = solver.report();
  return x;
}

// Projection onto trigonometric polynomials of degree <= K on the 2M-point
// grid: P_ij = (1/2M)(1 + 2 sum_{m=1}^{K} cos(m (s_i - s_j))). Identity for
// K >= M.
template <class Scalar>
MatX<Scalar> bandwidth_projector(int M, int K) {
  const int n = 2 * M;
  if (K >= M) return MatX<Scalar>::Identity(n, n);
  if (K < 0) throw ValidationError("bandwidth", "must be non-negative");
  MatX<Scalar> P(n, n);
  using std::cos;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      Scalar acc(1);
      const Scalar ang = Scalar(i - j) * Scalar(EIGEN_PI) / Scalar(M);
      for (int m = 1; m <= K; ++m) acc += Scalar(2) * cos(Scalar(m) * ang);
      P(i, j) = acc / Scalar(n);
    }
  return P;
}

// Apply the projector to each curve block and component of a stacked density.
template <class Scalar>
void project_density(VecX<Scalar>& x, const MatX<Scalar>& P, int M) {
  const int n = 2 * M;
  VecX<Scalar> buf(n);
  for (int blk = 0; blk < 2; ++blk)
    for (int c = 0; c < 2; ++c) {
      const Eigen::Index base = blk * 2 * n + c;
      for (int j = 0; j < n; ++j) buf(j) = x(base + 2 * j);
      buf = P * buf;
      for (int j = 0; j < n; ++j) x(base + 2 * j) = buf(j);
    }
}

// March the orders: solve block 0 against the history-corrected data,
// projecting each solution when a bandwidth is set. Non-finite solutions
// abort with the failing order.
template <class Scalar>
DensitySet<Scalar> solve_sequence(const DiscreteSystem<Scalar>& sys, const std::vector<VecX<Scalar>>& data,
                                  const TikhonovConfig<Scalar>& cfg, SolveReport<Scalar>* report = nullptr) {
  if (static_cast<int>(data.size()) != sys.n_orders + 1)
    throw ValidationError("data", "one right-hand side per order 0..N required");
  SequenceSolver<Scalar> solver(sys.matrix(), cfg);
  if (report) *report = solver.report();
  MatX<Scalar> P;
  const bool project = cfg.bandwidth > 0 && cfg.bandwidth < sys.M;
  if (project) P = bandwidth_projector<Scalar>(sys.M, cfg.bandwidth);
  DensitySet<Scalar> out{sys.M, {}};
  out.orders.reserve(data.size());
  for (int n = 0; n <= sys.n_orders; ++n) {
    const VecX<Scalar> rhs = history_rhs(n, data[static_cast<size_t>(n)], out, sys);
    VecX<Scalar> x = solver.solve(rhs);
    if (!x.allFinite()) throw NumericalFailure(n, "non-finite density in order march");
    if (project) project_density(x, P, sys.M);
    out.orders.push_back(std::move(x));
  }
  return out;
}

// Field value at an interior point from the solved densities,
// u_n(x) = sum_{m<=n} (1/2M) sum_j E_{n-m}(x, y_j) psi_m(y_j) over both
// curves. Warns when x is within one mesh width of a quadrature node, where
// the plain trapezoid rule degrades.
template <class Scalar>
Vec2<Scalar> interior_eval(int n, const Vec2<Scalar>& x, const DensitySet<Scalar>& densities,
                           const AnnulusGeometry<Scalar>& geom, const NystromGrid<Scalar>& grid,
                           const MaterialTables<Scalar>& mt) {
  if (n < 0 || static_cast<size_t>(n) >= densities.orders.size())
    throw std::domain_error("interior_eval: order outside solved densities");
  const Scalar inv2m = Scalar(1) / Scalar(2 * grid.M);
  const Scalar h = Scalar(EIGEN_PI) / Scalar(grid.M);
  const Mat2<Scalar> I = Mat2<Scalar>::Identity();
  Vec2<Scalar> acc = Vec2<Scalar>::Zero();
  bool warned = false;
  for (int curve = 1; curve <= 2; ++curve) {
    const auto nd = curve_nodes(curve == 1 ? geom.gamma1 : geom.gamma2, grid);
    for (int j = 0; j < 2 * grid.M; ++j) {
      const Vec2<Scalar> d = x - nd.x[static_cast<size_t>(j)];
      const Scalar r = d.norm();
      if (!warned && r < h * nd.speed[static_cast<size_t>(j)]) {
        std::cerr << "interior_eval: point within one mesh width of the boundary, "
                     "quadrature accuracy degrades\n";
        warned = true;
      }
      PairContext<Scalar> ctx(mt, r);
      const Mat2<Scalar> J = matrix_J(d);
      for (int m = 0; m <= n; ++m) {
        const auto l1 = ctx.layer(1, n - m);
        const auto l2 = ctx.layer(2, n - m);
        acc += (l1.full * I + l2.full * J) * densities.at(m, curve, j) * inv2m;
      }
    }
  }
  return acc;
}

// Deterministic standard normal draws: mt19937_64 through the Box-Muller
// transform (two 53-bit uniforms per pair).
template <class Scalar>
class GaussianSampler {
 public:
  explicit GaussianSampler(std::uint64_t seed) : eng_(seed) {}

  Scalar operator()() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    using std::cos;
    using std::log;
    using std::sin;
    using std::sqrt;
    const Scalar u1 = Scalar(1) - unit();  // (0, 1], keeps the log finite
    const Scalar u2 = unit();
    const Scalar rad = sqrt(Scalar(-2) * log(u1));
    const Scalar ang = Scalar(2) * Scalar(EIGEN_PI) * u2;
    spare_ = rad * sin(ang);
    have_spare_ = true;
    return rad * cos(ang);
  }

 private:
  Scalar unit() { return Scalar(eng_() >> 11) * Scalar(0x1p-53); }

  std::mt19937_64 eng_;
  Scalar spare_ = Scalar(0);
  bool have_spare_ = false;
};

// g + delta * (|g| / |v|) v with v standard normal, so the relative
// perturbation in the Euclidean norm is exactly delta. Draws are consumed
// even when g or delta vanish, keeping the stream aligned across orders.
// A zero-norm draw (possible only in exotic floating-point corners) is
// resampled rather than silently skipped.
template <class Scalar>
VecX<Scalar> add_noise(const VecX<Scalar>& g, Scalar delta, GaussianSampler<Scalar>& rng) {
  if (delta < Scalar(0)) throw ValidationError("delta", "must be non-negative");
  VecX<Scalar> v(g.size());
  Scalar vn = Scalar(0);
  do {
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = rng();
    vn = v.norm();
  } while (!(vn > Scalar(0)) && v.size() > 0);
  const Scalar gn = g.norm();
  if (delta == Scalar(0) || gn == Scalar(0)) return g;
  return g + delta * gn / vn * v;
}

}  // namespace lagbem
