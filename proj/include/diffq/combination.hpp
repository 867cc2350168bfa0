// Copyright 2026 The diffq Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// =============================================================================

#ifndef DIFFQ_COMBINATION_HPP
#define DIFFQ_COMBINATION_HPP

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "diffq/error.hpp"
#include "diffq/graph.hpp"
#include "diffq/linalg.hpp"
#include "diffq/subspace.hpp"

namespace diffq {

/// consensus_metropolis: Metropolis weights ⊗ I_L (consensus basis only).
/// subspace_lsq: minimizer of ‖A − P_U‖_F² over the feasible set; if that
/// minimizer has ρ(A − P_U) >= 1, the spectral fit is used instead.
/// subspace_spectral: minimizer of ‖A − P_U‖₂ over symmetric feasible A.
enum class CombinationMode { consensus_metropolis, subspace_lsq, subspace_spectral };

/// Block combination matrix with topology-induced sparsity. `a_scalar` is set
/// only for the consensus construction, where a = a_scalar ⊗ I_L.
struct CombinationMatrix {
  Matrix a;
  Topology topology;
  std::vector<int> block_dims;
  std::optional<Matrix> a_scalar;

  int offset(int k) const {
    int off = 0;
    for (int j = 0; j < k; ++j) off += block_dims[j];
    return off;
  }

  Matrix block(int k, int l) const {
    return a.block(offset(k), offset(l), block_dims[k], block_dims[l]);
  }
};

/// Spectral radius of a general square matrix.
inline double spectral_radius(const Matrix& m) {
  if (m.rows() == 0) return 0.0;
  Eigen::EigenSolver<Matrix> es(m, false);
  if (es.info() != Eigen::Success) fail(ErrorCode::eigen_failure, "eigenvalue solver failed");
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

/// Outcome of each structural check on a combination matrix.
struct CombinationChecks {
  double au_residual = 0.0;   // ‖AU − U‖_F
  double uta_residual = 0.0;  // ‖UᵀA − Uᵀ‖_F
  double off_pattern = 0.0;   // max |A_kl| over non-neighbors
  double rho = 0.0;           // ρ(A − P_U)

  bool constraints_ok() const { return au_residual <= kConstraintTol && uta_residual <= kConstraintTol; }
  bool sparsity_ok() const { return off_pattern == 0.0; }
  bool spectral_ok() const { return rho < 1.0; }
  bool all_ok() const { return constraints_ok() && sparsity_ok() && spectral_ok(); }
};

inline CombinationChecks check_combination(const Matrix& a, const SubspaceBasis& basis,
                                           const Topology& topology) {
  CombinationChecks c;
  c.au_residual = (a * basis.u - basis.u).norm();
  c.uta_residual = (basis.u.transpose() * a - basis.u.transpose()).norm();
  for (int k = 0, ok = 0; k < topology.n; ok += basis.block_dims[k], ++k)
    for (int l = 0, ol = 0; l < topology.n; ol += basis.block_dims[l], ++l)
      if (!topology.linked(k, l))
        c.off_pattern = std::max(
            c.off_pattern,
            a.block(ok, ol, basis.block_dims[k], basis.block_dims[l]).cwiseAbs().maxCoeff());
  c.rho = spectral_radius(a - basis.projector());
  return c;
}

/// Scalar Metropolis–Hastings weights: a_kl = 1/max(|N_k|, |N_l|) on links,
/// diagonal fills each row to 1. Symmetric and doubly stochastic.
inline Matrix metropolis_weights(const Topology& t) {
  Matrix a = Matrix::Zero(t.n, t.n);
  for (int k = 0; k < t.n; ++k) {
    double off = 0.0;
    for (int l : t.neighborhoods[k]) {
      if (l == k) continue;
      a(k, l) = 1.0 / std::max(t.degree(k), t.degree(l));
      off += a(k, l);
    }
    a(k, k) = 1.0 - off;
  }
  return a;
}

namespace detail {

/// Affine set {A supported on the block pattern : AU = U, UᵀA = Uᵀ} written
/// over the vector x of free entries as C x = b. Nearest-point and tangent
/// projections use a rank-revealing factorization of C Cᵀ, which is singular
/// because UᵀAU = I appears in both constraint families.
class PatternSystem {
 public:
  PatternSystem(const SubspaceBasis& basis, const Topology& topology)
      : m_(basis.dim()), p_(basis.p), pu_(basis.projector()) {
    const Matrix& u = basis.u;
    std::vector<int> owner(m_);
    for (int k = 0, off = 0; k < topology.n; off += basis.block_dims[k], ++k)
      for (int j = 0; j < basis.block_dims[k]; ++j) owner[off + j] = k;
    for (int r = 0; r < m_; ++r)
      for (int c = 0; c < m_; ++c)
        if (topology.linked(owner[r], owner[c])) free_.push_back({r, c});

    const auto nvars = static_cast<Eigen::Index>(free_.size());
    const Eigen::Index ncons = 2 * static_cast<Eigen::Index>(m_) * p_;
    c_ = Matrix::Zero(ncons, nvars);
    for (Eigen::Index v = 0; v < nvars; ++v) {
      const auto [r, c] = free_[v];
      for (int j = 0; j < p_; ++j) {
        c_(static_cast<Eigen::Index>(r) * p_ + j, v) = u(c, j);                        // (AU)_rj
        c_(static_cast<Eigen::Index>(m_) * p_ + static_cast<Eigen::Index>(c) * p_ + j, v) = u(r, j);  // (UᵀA)_jc
      }
    }
    target_.resize(ncons);
    for (int r = 0; r < m_; ++r)
      for (int j = 0; j < p_; ++j) {
        target_(static_cast<Eigen::Index>(r) * p_ + j) = u(r, j);
        target_(static_cast<Eigen::Index>(m_) * p_ + static_cast<Eigen::Index>(r) * p_ + j) = u(r, j);
      }
    gram_.setThreshold(1e-12);
    gram_.compute(c_ * c_.transpose());
  }

  /// Nearest point (in the Euclidean norm of x) of the affine set.
  Vector correct(Vector x) const {
    for (int round = 0; round < 3; ++round) x += c_.transpose() * gram_.solve(Vector(target_ - c_ * x));
    return x;
  }

  /// Orthogonal projection onto the null space of C.
  Vector tangent(Vector g) const {
    for (int round = 0; round < 2; ++round) g -= c_.transpose() * gram_.solve(Vector(c_ * g));
    return g;
  }

  Vector on_pattern(const Matrix& a) const {
    Vector x(static_cast<Eigen::Index>(free_.size()));
    for (std::size_t v = 0; v < free_.size(); ++v) x(static_cast<Eigen::Index>(v)) = a(free_[v].r, free_[v].c);
    return x;
  }

  Matrix to_matrix(const Vector& x) const {
    Matrix a = Matrix::Zero(m_, m_);
    for (std::size_t v = 0; v < free_.size(); ++v) a(free_[v].r, free_[v].c) = x(static_cast<Eigen::Index>(v));
    return a;
  }

  const Matrix& projector() const { return pu_; }

  /// Symmetric matrices of the affine set as s₀ + N z, with s indexing the
  /// upper-triangle pattern entries and N an orthonormal null-space basis.
  struct SymmetricChart {
    int m = 0;
    std::vector<std::pair<int, int>> pairs;
    Vector s0;
    Matrix null;

    Matrix matrix(const Vector& s) const {
      Matrix a = Matrix::Zero(m, m);
      for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto [r, c] = pairs[i];
        a(r, c) = a(c, r) = s(static_cast<Eigen::Index>(i));
      }
      return a;
    }

    Vector from_matrix(const Matrix& a) const {
      Vector s(static_cast<Eigen::Index>(pairs.size()));
      for (std::size_t i = 0; i < pairs.size(); ++i) s(static_cast<Eigen::Index>(i)) = a(pairs[i].first, pairs[i].second);
      return s;
    }

    /// Gradient with respect to s of ⟨G, matrix(s)⟩ for symmetric G.
    Vector pull_back(const Matrix& g) const {
      Vector out(static_cast<Eigen::Index>(pairs.size()));
      for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto [r, c] = pairs[i];
        out(static_cast<Eigen::Index>(i)) = r == c ? g(r, r) : 2.0 * g(r, c);
      }
      return out;
    }
  };

  SymmetricChart symmetric_chart() const {
    SymmetricChart chart;
    chart.m = m_;
    std::vector<Eigen::Index> upper, lower;
    for (std::size_t v = 0; v < free_.size(); ++v) {
      const auto [r, c] = free_[v];
      if (r > c) continue;
      chart.pairs.emplace_back(r, c);
      upper.push_back(static_cast<Eigen::Index>(v));
      lower.push_back(-1);
      if (r != c)
        for (std::size_t w = 0; w < free_.size(); ++w)
          if (free_[w].r == c && free_[w].c == r) lower.back() = static_cast<Eigen::Index>(w);
    }
    const auto ns = static_cast<Eigen::Index>(chart.pairs.size());
    Matrix cs(c_.rows(), ns);
    for (Eigen::Index i = 0; i < ns; ++i) {
      cs.col(i) = c_.col(upper[static_cast<std::size_t>(i)]);
      if (lower[static_cast<std::size_t>(i)] >= 0) cs.col(i) += c_.col(lower[static_cast<std::size_t>(i)]);
    }
    Eigen::JacobiSVD<Matrix> svd(cs, Eigen::ComputeThinU | Eigen::ComputeFullV);
    svd.setThreshold(1e-10);
    const auto rank = svd.rank();
    chart.s0 = svd.solve(target_);
    chart.null = svd.matrixV().rightCols(ns - rank);
    return chart;
  }

 private:
  struct Entry {
    int r, c;
  };
  int m_;
  int p_;
  Matrix pu_;
  std::vector<Entry> free_;
  Matrix c_;
  Vector target_;
  Eigen::CompleteOrthogonalDecomposition<Matrix> gram_;
};

/// Minimizer of ‖A − P_U‖_F² over the affine set: the nearest feasible point to
/// P_U restricted to the pattern.
inline Matrix frobenius_fit(const PatternSystem& sys) {
  return sys.to_matrix(sys.correct(sys.on_pattern(sys.projector())));
}

/// Smoothed spectral radius of a symmetric X: m + log(Σ e^{β(λ−m)} + e^{β(−λ−m)})/β
/// with m = max|λ|, and its gradient V diag(w) Vᵀ.
struct SmoothedRadius {
  double value = 0.0;
  double rho = 0.0;
  Matrix grad;
};

inline SmoothedRadius smoothed_radius(const Matrix& x, double beta, bool with_grad) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(x, with_grad ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) fail(ErrorCode::eigen_failure, "symmetric eigensolver failed");
  const Vector& lam = es.eigenvalues();
  SmoothedRadius out;
  out.rho = lam.cwiseAbs().maxCoeff();
  const Eigen::ArrayXd up = (beta * (lam.array() - out.rho)).exp();
  const Eigen::ArrayXd down = (beta * (-lam.array() - out.rho)).exp();
  const double z = up.sum() + down.sum();
  out.value = out.rho + std::log(z) / beta;
  if (with_grad) out.grad = es.eigenvectors() * ((up - down) / z).matrix().asDiagonal() * es.eigenvectors().transpose();
  return out;
}

/// Minimizes ρ(A − P_U) = ‖A − P_U‖₂ over symmetric A in the affine set.
/// Symmetric feasible matrices are written as s₀ + N z over the upper
/// triangle of the pattern; the smoothed radius is minimized in z by L-BFGS
/// with β continuation. Returns the iterate with the smallest exact radius.
inline Matrix spectral_fit(const PatternSystem& sys, const Matrix& start) {
  const Matrix& pu = sys.projector();
  const PatternSystem::SymmetricChart chart = sys.symmetric_chart();
  const auto dim = chart.null.cols();
  if (dim == 0) return chart.matrix(chart.s0);

  const Matrix sym_start = 0.5 * (start + start.transpose());
  Vector z = chart.null.transpose() * (chart.from_matrix(sym_start) - chart.s0);
  auto eval = [&](const Vector& zz, double beta, bool with_grad, Vector* grad) {
    const SmoothedRadius r = smoothed_radius(chart.matrix(chart.s0 + chart.null * zz) - pu, beta, with_grad);
    if (with_grad) *grad = chart.null.transpose() * chart.pull_back(r.grad);
    return r;
  };

  Vector best = z;
  double best_rho = eval(z, 1.0, false, nullptr).rho;
  constexpr int kMemory = 8;
  for (double beta : {10.0, 30.0, 100.0, 300.0, 1000.0, 3000.0, 10000.0, 30000.0}) {
    std::vector<Vector> ss, ys;
    Vector g;
    SmoothedRadius cur = eval(z, beta, true, &g);
    for (int it = 0; it < 400; ++it) {
      // Two-loop recursion for the quasi-Newton direction.
      Vector q = g;
      std::vector<double> alpha(ss.size());
      for (int i = static_cast<int>(ss.size()) - 1; i >= 0; --i) {
        alpha[i] = ss[i].dot(q) / ys[i].dot(ss[i]);
        q -= alpha[i] * ys[i];
      }
      if (!ss.empty()) q *= ss.back().dot(ys.back()) / ys.back().squaredNorm();
      for (std::size_t i = 0; i < ss.size(); ++i) q += ss[i] * (alpha[i] - ys[i].dot(q) / ys[i].dot(ss[i]));
      Vector d = -q;
      double slope = g.dot(d);
      if (!(slope < 0.0)) {
        d = -g;
        slope = -g.squaredNorm();
        ss.clear();
        ys.clear();
      }
      if (-slope < 1e-20) break;
      double t = ss.empty() ? std::min(1.0, 0.1 / d.norm()) : 1.0;
      bool accepted = false;
      for (int ls = 0; ls < 50; ++ls, t *= 0.5) {
        Vector g_next;
        const Vector trial = z + t * d;
        const SmoothedRadius next = eval(trial, beta, true, &g_next);
        if (next.value <= cur.value + 1e-4 * t * slope) {
          const Vector sv = trial - z;
          const Vector yv = g_next - g;
          if (sv.dot(yv) > 1e-16 * sv.norm() * yv.norm()) {
            ss.push_back(sv);
            ys.push_back(yv);
            if (static_cast<int>(ss.size()) > kMemory) {
              ss.erase(ss.begin());
              ys.erase(ys.begin());
            }
          }
          z = trial;
          g = g_next;
          cur = next;
          if (next.rho < best_rho) {
            best_rho = next.rho;
            best = z;
          }
          accepted = true;
          break;
        }
      }
      if (!accepted) break;
    }
  }
  return chart.matrix(chart.s0 + chart.null * best);
}

/// When U = U_s ⊗ I_L with every agent of dimension L, returns U_s. The
/// problem then decouples per component and A = A_s ⊗ I_L.
inline std::optional<Matrix> kronecker_factor(const SubspaceBasis& basis) {
  const int l = basis.block_dims.empty() ? 0 : basis.block_dims.front();
  if (l <= 0 || basis.p % l != 0) return std::nullopt;
  for (int d : basis.block_dims)
    if (d != l) return std::nullopt;
  const int n = basis.agents();
  const int ps = basis.p / l;
  Matrix us(n, ps);
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < ps; ++j) us(k, j) = basis.u(static_cast<Eigen::Index>(k) * l, static_cast<Eigen::Index>(j) * l);
  if ((kron_identity(us, l) - basis.u).cwiseAbs().maxCoeff() > 1e-14) return std::nullopt;
  return us;
}

}  // namespace detail

inline constexpr double kSpectralMargin = 1e-6;

/// Builds and validates a combination matrix for `basis` over `topology`.
inline CombinationMatrix build_combination(const Topology& topology, const SubspaceBasis& basis,
                                           CombinationMode mode) {
  basis.validate();
  require(basis.agents() == topology.n, ErrorCode::invalid_argument,
          "basis and topology disagree on the agent count");

  CombinationMatrix out;
  out.topology = topology;
  out.block_dims = basis.block_dims;

  if (mode == CombinationMode::consensus_metropolis) {
    require(is_consensus_basis(basis), ErrorCode::invalid_argument,
            "Metropolis construction requires the consensus basis");
    out.a_scalar = metropolis_weights(topology);
    out.a = kron_identity(*out.a_scalar, basis.block_dims.front());
  } else {
    // Work on the scalar factor when the basis allows it.
    SubspaceBasis reduced = basis;
    int lift = 1;
    if (const auto us = detail::kronecker_factor(basis)) {
      lift = basis.block_dims.front();
      reduced.u = *us;
      reduced.p = static_cast<int>(us->cols());
      reduced.block_dims.assign(topology.n, 1);
    }
    const detail::PatternSystem sys(reduced, topology);
    Matrix a = detail::frobenius_fit(sys);
    const bool spectral = mode == CombinationMode::subspace_spectral;
    if (spectral || spectral_radius(a - sys.projector()) >= 1.0 - kSpectralMargin)
      a = detail::spectral_fit(sys, a);
    out.a = lift == 1 ? a : kron_identity(a, lift);
  }

  const CombinationChecks checks = check_combination(out.a, basis, topology);
  if (!checks.constraints_ok())
    fail(ErrorCode::infeasible_constraints,
         "AU=U / UᵀA=Uᵀ cannot be met on this topology (residuals " +
             std::to_string(checks.au_residual) + ", " + std::to_string(checks.uta_residual) + ")");
  if (!checks.sparsity_ok())
    fail(ErrorCode::infeasible_constraints, "combination matrix leaks outside the topology");
  if (checks.rho >= 1.0 - kSpectralMargin)
    fail(ErrorCode::spectral_violation,
         "rho(A - P_U) = " + std::to_string(checks.rho) + " is not below 1");
  return out;
}

}  // namespace diffq

#endif  // DIFFQ_COMBINATION_HPP
