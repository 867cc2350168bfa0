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

#ifndef DIFFQ_SUBSPACE_HPP
#define DIFFQ_SUBSPACE_HPP

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "diffq/error.hpp"
#include "diffq/graph.hpp"
#include "diffq/linalg.hpp"
#include "diffq/rng.hpp"

namespace diffq {

/// Semi-unitary M×P basis of the constraint subspace, with the per-agent block
/// partition of its rows.
struct SubspaceBasis {
  Matrix u;
  std::vector<int> block_dims;
  int p = 0;

  int agents() const { return static_cast<int>(block_dims.size()); }
  int dim() const { return static_cast<int>(u.rows()); }

  int offset(int k) const {
    return std::accumulate(block_dims.begin(), block_dims.begin() + k, 0);
  }

  Matrix projector() const { return u * u.transpose(); }

  /// Throws unless UᵀU = I within kOrthonormalTol and P < M.
  void validate() const {
    require(u.cols() == p, ErrorCode::invalid_argument, "basis column count differs from p");
    require(std::accumulate(block_dims.begin(), block_dims.end(), 0) == u.rows(),
            ErrorCode::invalid_argument, "block dimensions do not sum to M");
    require(p < u.rows(), ErrorCode::invalid_argument, "subspace dimension must be below M");
    const double err = (u.transpose() * u - Matrix::Identity(p, p)).cwiseAbs().maxCoeff();
    require(err <= kOrthonormalTol, ErrorCode::invalid_argument,
            "basis is not semi-unitary (max |UᵀU - I| = " + std::to_string(err) + ")");
  }
};

/// U = (1/√N)(1_N ⊗ I_L).
inline SubspaceBasis subspace_consensus(int n, int l) {
  require(n >= 1 && l >= 1, ErrorCode::invalid_argument, "consensus basis needs n, l >= 1");
  SubspaceBasis b;
  b.u = kron_identity(Matrix::Constant(n, 1, 1.0 / std::sqrt(static_cast<double>(n))), l);
  b.block_dims.assign(n, l);
  b.p = l;
  return b;
}

/// True when `basis` spans the consensus subspace with the standard layout.
inline bool is_consensus_basis(const SubspaceBasis& basis) {
  const int n = basis.agents();
  if (n == 0 || basis.u.rows() % n != 0) return false;
  const int l = static_cast<int>(basis.u.rows()) / n;
  if (basis.p != l) return false;
  for (int d : basis.block_dims)
    if (d != l) return false;
  const SubspaceBasis ref = subspace_consensus(n, l);
  return (basis.projector() - ref.projector()).cwiseAbs().maxCoeff() <= kConstraintTol;
}

/// Eigenvectors of the graph Laplacian for its `p_vectors` smallest eigenvalues,
/// each lifted to the multitask space as u_j ⊗ I_L.
struct LaplacianModes {
  Vector eigenvalues;
  Matrix eigenvectors;  // N × p_vectors
};

inline LaplacianModes smallest_laplacian_modes(const Matrix& lap, int p_vectors) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(lap);
  if (es.info() != Eigen::Success) fail(ErrorCode::eigen_failure, "Laplacian eigensolver failed");
  LaplacianModes m;
  m.eigenvalues = es.eigenvalues().head(p_vectors);
  m.eigenvectors = es.eigenvectors().leftCols(p_vectors);
  // Sign convention: the entry of largest magnitude is positive.
  for (int j = 0; j < p_vectors; ++j) {
    Eigen::Index idx = 0;
    m.eigenvectors.col(j).cwiseAbs().maxCoeff(&idx);
    if (m.eigenvectors(idx, j) < 0.0) m.eigenvectors.col(j) *= -1.0;
  }
  return m;
}

inline SubspaceBasis subspace_smooth(const Topology& topology, int p_vectors, int l, double weight) {
  require(p_vectors >= 1 && p_vectors <= topology.n, ErrorCode::invalid_argument,
          "p_vectors must lie in [1, n]");
  require(l >= 1, ErrorCode::invalid_argument, "per-agent dimension must be positive");
  const LaplacianModes modes = smallest_laplacian_modes(laplacian(topology, weight), p_vectors);
  SubspaceBasis b;
  b.u = kron_identity(modes.eigenvectors, l);
  b.block_dims.assign(topology.n, l);
  b.p = p_vectors * l;
  return b;
}

/// Target and constrained optimum, both stacked over agents.
struct GroundTruth {
  Vector w_star;
  Vector w_opt;
};

/// Raw network signal drawn from N(mean·1, I) of length n·l.
inline Vector draw_raw_signal(int n, int l, double mean, std::uint64_t seed) {
  auto rng = CounterStream::at(seed, 0, 0, 0, StreamPurpose::signal);
  Vector raw(static_cast<Eigen::Index>(n) * l);
  for (Eigen::Index i = 0; i < raw.size(); ++i) raw(i) = mean + rng.normal();
  return raw;
}

/// Graph diffusion kernel: w* = (exp(−τ𝓛) ⊗ I_L) raw. Uses Eigen's Padé
/// scaling-and-squaring exponential.
inline Vector smooth_signal(const Matrix& lap, const Vector& raw, double tau, int l) {
  require(tau >= 0.0, ErrorCode::invalid_argument, "tau must be nonnegative");
  require(raw.size() == lap.rows() * l, ErrorCode::invalid_argument, "raw signal length mismatch");
  const Matrix kernel = (-tau * lap).exp();
  return kron_identity(kernel, l) * raw;
}

/// Minimizer of Σ_k ½ (w_k − w*_k)ᵀ R_k (w_k − w*_k) over Range(U):
/// W° = U (UᵀHU)⁻¹ UᵀH W*, with H = blockdiag(R_k).
inline Vector compute_wopt(const SubspaceBasis& basis, const std::vector<Matrix>& covariances,
                           const Vector& w_star) {
  const int n = basis.agents();
  require(static_cast<int>(covariances.size()) == n, ErrorCode::invalid_argument,
          "one covariance per agent is required");
  require(w_star.size() == basis.dim(), ErrorCode::invalid_argument, "w_star length mismatch");
  Matrix h = Matrix::Zero(basis.dim(), basis.dim());
  for (int k = 0, off = 0; k < n; off += basis.block_dims[k], ++k) {
    const int mk = basis.block_dims[k];
    require(covariances[k].rows() == mk && covariances[k].cols() == mk,
            ErrorCode::invalid_argument, "covariance block has wrong size");
    h.block(off, off, mk, mk) = covariances[k];
  }
  const Matrix uh = basis.u.transpose() * h;
  const Matrix g = uh * basis.u;
  Eigen::SelfAdjointEigenSolver<Matrix> es(g, Eigen::EigenvaluesOnly);
  const double lmax = es.eigenvalues().cwiseAbs().maxCoeff();
  if (!(es.eigenvalues().minCoeff() > 1e-12 * std::max(lmax, 1.0)))
    fail(ErrorCode::singular_projection, "UᵀHU is singular");
  return basis.u * g.ldlt().solve(uh * w_star);
}

}  // namespace diffq

#endif  // DIFFQ_SUBSPACE_HPP
