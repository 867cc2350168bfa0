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

#ifndef DIFFQ_ANALYSIS_HPP
#define DIFFQ_ANALYSIS_HPP

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "diffq/combination.hpp"
#include "diffq/error.hpp"
#include "diffq/learning.hpp"
#include "diffq/linalg.hpp"
#include "diffq/subspace.hpp"

namespace diffq {

inline constexpr double kDefectiveConditionLimit = 1e8;

/// Spectral quantities of A in the basis V = [U | W Y], where W spans the
/// orthogonal complement of Range(U) and J = WᵀAW = Y Λ Y⁻¹ is the part of A
/// acting on that complement.
struct SpectralReport {
  double rho_j = 0.0;          // ρ(J) = ρ(A − P_U)
  double rho_i_minus_j = 0.0;  // max |1 − λ| over eigenvalues λ of J
  double v1 = 1.0;             // ‖V⁻¹‖₂
  double v2 = 1.0;             // ‖V‖₂
  double epsilon_used = 0.0;   // always 0: defective inputs are rejected
  Eigen::VectorXcd j_eigenvalues;
};

/// Orthonormal basis of the complement of Range(U).
inline Matrix orthogonal_complement(const Matrix& u) {
  Eigen::HouseholderQR<Matrix> qr(u);
  const Matrix q = qr.householderQ() * Matrix::Identity(u.rows(), u.rows());
  return q.rightCols(u.rows() - u.cols());
}

inline SpectralReport spectral_report(const CombinationMatrix& a, const SubspaceBasis& basis) {
  basis.validate();
  require(a.a.rows() == basis.dim() && a.a.cols() == basis.dim(), ErrorCode::invalid_argument,
          "combination matrix and basis sizes differ");
  const Matrix w = orthogonal_complement(basis.u);
  const Matrix j = w.transpose() * a.a * w;
  SpectralReport rep;
  if (j.rows() == 0) return rep;

  Eigen::MatrixXcd y;
  const double asym = (j - j.transpose()).cwiseAbs().maxCoeff();
  if (asym <= 1e-12 * std::max(1.0, j.cwiseAbs().maxCoeff())) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (j + j.transpose()));
    if (es.info() != Eigen::Success) fail(ErrorCode::eigen_failure, "symmetric eigensolver failed");
    rep.j_eigenvalues = es.eigenvalues().cast<std::complex<double>>();
    y = es.eigenvectors().cast<std::complex<double>>();
  } else {
    Eigen::EigenSolver<Matrix> es(j);
    if (es.info() != Eigen::Success) fail(ErrorCode::eigen_failure, "eigensolver failed");
    rep.j_eigenvalues = es.eigenvalues();
    y = es.eigenvectors();
  }
  rep.rho_j = rep.j_eigenvalues.cwiseAbs().maxCoeff();
  rep.rho_i_minus_j = 0.0;
  for (const auto& lam : rep.j_eigenvalues) rep.rho_i_minus_j = std::max(rep.rho_i_minus_j, std::abs(1.0 - lam));

  // U and W Y have orthogonal ranges and W is orthonormal, so the singular
  // values of V are those of Y together with ones.
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(y);
  const auto& sv = svd.singularValues();
  const double smax = sv.maxCoeff();
  const double smin = sv.minCoeff();
  if (!(smin > 0.0) || smax / smin > kDefectiveConditionLimit)
    fail(ErrorCode::defective_matrix, "combination matrix is not diagonalizable within tolerance (cond = " +
                                          std::to_string(smin > 0.0 ? smax / smin : INFINITY) + ")");
  rep.v2 = std::max(1.0, smax);
  rep.v1 = 1.0 / std::min(1.0, smin);
  return rep;
}

/// Largest admissible mixing parameter:
/// min{1, (1 − (ρ(J)+ε)) / (4 v₁² v₂² β² (ρ(I−J)+ε)²)}, and 1 when β² = 0.
inline double gamma_bound(const SpectralReport& rep, double beta_q_max) {
  require(beta_q_max >= 0.0, ErrorCode::invalid_argument, "beta_q^2 must be nonnegative");
  if (beta_q_max == 0.0) return 1.0;
  const double eps = rep.epsilon_used;
  const double rim = rep.rho_i_minus_j + eps;
  const double num = 1.0 - (rep.rho_j + eps);
  const double den = 4.0 * rep.v1 * rep.v1 * rep.v2 * rep.v2 * beta_q_max * rim * rim;
  if (den == 0.0) return 1.0;
  return std::min(1.0, num / den);
}

/// Largest β² across per-agent quantizers.
inline double max_beta_sq(const std::vector<QuantizerSpec>& specs) {
  double b = 0.0;
  for (const auto& s : specs) b = std::max(b, noise_budget(s).beta_sq);
  return b;
}

/// max |(1 − γ) + γλ| over eigenvalues λ of J.
inline double minor_mixing_radius(const SpectralReport& rep, double gamma) {
  double r = 0.0;
  for (const auto& lam : rep.j_eigenvalues) r = std::max(r, std::abs((1.0 - gamma) + gamma * lam));
  return r;
}

/// Upper bound on the expected bits of one ANQ-coded M_k-vector whose squared
/// norm has mean chi_ms:
/// log2(3) m_k (2 + log2( ln(1 + (ω/η)√chi_ms) / (2 ln(ω + √(1+ω²))) + 2 )).
inline double rate_upper_bound(double omega, double eta, double chi_ms, int m_k) {
  require(omega > 0.0 && eta > 0.0, ErrorCode::invalid_argument, "omega and eta must be positive");
  require(chi_ms >= 0.0, ErrorCode::invalid_argument, "chi_ms must be nonnegative");
  const double inner = std::log1p(omega / eta * std::sqrt(chi_ms)) / (2.0 * std::log(omega + std::sqrt(1.0 + omega * omega)));
  return codec::kBitsPerSymbol * m_k * (2.0 + std::log2(inner + 2.0));
}

// ---------------------------------------------------------------------------
// Rate-distortion sweeps.

/// One grid point: the parameter value shown on the axis and the per-agent
/// quantizers it resolves to.
struct SweepPoint {
  double param_value = 0.0;
  std::vector<QuantizerSpec> quantizers;
};

struct SweepCurve {
  std::string label;
  std::vector<SweepPoint> points;
};

/// Shared problem data for every point of a sweep; quantizers in `base` are
/// replaced per point.
struct SweepSetup {
  RunConfig base;
  std::vector<DataModel> models;
  SubspaceBasis basis;
  CombinationMatrix a;
};

struct SweepRow {
  std::string label;
  double param_value = 0.0;
  double rate = 0.0;
  double msd = 0.0;
  double rate_se = 0.0;  // Monte-Carlo standard error of the steady rate
  double msd_se = 0.0;
  bool diverged = false;
};

namespace detail {

inline double standard_error(const Vector& v) {
  const auto n = v.size();
  if (n < 2) return 0.0;
  const double mean = v.mean();
  return std::sqrt((v.array() - mean).square().sum() / static_cast<double>(n - 1) / static_cast<double>(n));
}

}  // namespace detail

inline std::vector<SweepRow> rate_distortion_sweep(const SweepSetup& setup, const std::vector<SweepCurve>& curves) {
  std::size_t total = 0;
  for (const auto& c : curves) total += c.points.size();
  require(total > 0, ErrorCode::config_error, "sweep grid is empty");
  std::vector<SweepRow> rows;
  rows.reserve(total);
  for (const auto& curve : curves) {
    for (const auto& pt : curve.points) {
      RunConfig cfg = setup.base;
      cfg.quantizers = pt.quantizers;
      cfg.per_agent = false;
      const RunResult res = run(cfg, setup.models, setup.basis, setup.a);
      SweepRow row;
      row.label = curve.label;
      row.param_value = pt.param_value;
      row.diverged = res.diverged();
      if (row.diverged) {
        row.rate = row.msd = std::numeric_limits<double>::infinity();
      } else {
        row.rate = res.steady_rate();
        row.msd = res.steady_msd();
        row.rate_se = detail::standard_error(res.run_steady_rate);
        row.msd_se = detail::standard_error(res.run_steady_msd);
      }
      rows.push_back(row);
    }
  }
  return rows;
}

inline constexpr double kSweepToleranceSigmas = 3.0;

/// Checks, along one curve ordered by increasing parameter, that the rate never
/// rises and the MSD never falls by more than the Monte-Carlo tolerance
/// 3·√(se_a² + se_b²) between adjacent points.
struct MonotonicityReport {
  int rate_violations = 0;
  int msd_violations = 0;
  bool ok() const { return rate_violations == 0 && msd_violations == 0; }
};

inline MonotonicityReport check_monotone(std::vector<SweepRow> curve) {
  std::sort(curve.begin(), curve.end(), [](const SweepRow& x, const SweepRow& y) { return x.param_value < y.param_value; });
  MonotonicityReport rep;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    const auto& p = curve[i - 1];
    const auto& c = curve[i];
    if (p.diverged || c.diverged) continue;
    const double rtol = kSweepToleranceSigmas * std::hypot(p.rate_se, c.rate_se);
    const double mtol = kSweepToleranceSigmas * std::hypot(p.msd_se, c.msd_se);
    if (c.rate > p.rate + rtol) ++rep.rate_violations;
    if (c.msd < p.msd - mtol) ++rep.msd_violations;
  }
  return rep;
}

/// Compares `candidate` against `reference` at matched rates: every candidate
/// point whose rate falls inside the reference rate range must have MSD no
/// lower than the reference curve (log-MSD interpolated linearly in rate)
/// minus the Monte-Carlo tolerance.
struct DominanceReport {
  int compared = 0;
  int violations = 0;
  bool ok() const { return violations == 0; }
};

inline DominanceReport check_dominated(const std::vector<SweepRow>& candidate, std::vector<SweepRow> reference) {
  reference.erase(std::remove_if(reference.begin(), reference.end(), [](const SweepRow& r) { return r.diverged; }),
                  reference.end());
  std::sort(reference.begin(), reference.end(), [](const SweepRow& x, const SweepRow& y) { return x.rate < y.rate; });
  DominanceReport rep;
  if (reference.size() < 2) return rep;
  for (const auto& c : candidate) {
    if (c.diverged || c.rate < reference.front().rate || c.rate > reference.back().rate) continue;
    std::size_t hi = 1;
    while (hi + 1 < reference.size() && reference[hi].rate < c.rate) ++hi;
    const auto& r0 = reference[hi - 1];
    const auto& r1 = reference[hi];
    const double t = r1.rate > r0.rate ? (c.rate - r0.rate) / (r1.rate - r0.rate) : 0.0;
    // Distortion falls roughly exponentially in rate, so log-MSD is interpolated.
    const double ref_msd = std::exp(std::log(r0.msd) + t * (std::log(r1.msd) - std::log(r0.msd)));
    const double ref_se = std::max(r0.msd_se, r1.msd_se);
    ++rep.compared;
    if (c.msd < ref_msd - kSweepToleranceSigmas * std::hypot(c.msd_se, ref_se)) ++rep.violations;
  }
  return rep;
}

inline std::vector<SweepRow> rows_with_label(const std::vector<SweepRow>& rows, const std::string& label) {
  std::vector<SweepRow> out;
  for (const auto& r : rows)
    if (r.label == label) out.push_back(r);
  return out;
}

/// Sweep CSV: label, param_value, rate_bits, msd, msd_db, diverged_flag.
inline void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows, const std::string& header_comment = {}) {
  if (!header_comment.empty()) os << "# " << header_comment << '\n';
  os << "label,param_value,rate_bits,msd,msd_db,diverged_flag\n";
  for (const auto& r : rows)
    os << r.label << ',' << format_double(r.param_value) << ',' << format_double(r.rate) << ','
       << format_double(r.msd) << ',' << format_double(to_db(r.msd)) << ',' << (r.diverged ? 1 : 0) << '\n';
}

}  // namespace diffq

#endif  // DIFFQ_ANALYSIS_HPP
