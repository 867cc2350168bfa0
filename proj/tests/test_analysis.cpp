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

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>

#include "diffq/analysis.hpp"

namespace diffq {
namespace {

CombinationMatrix full_matrix(const Matrix& a, int n, int l) {
  CombinationMatrix c;
  c.a = a;
  c.topology = build_topology(n, 1.0, 1);
  c.block_dims.assign(n, l);
  return c;
}

// A = P_U + W B Wᵀ on the consensus basis of N=3, L=1.
CombinationMatrix with_minor_block(const Matrix& b) {
  const SubspaceBasis basis = subspace_consensus(3, 1);
  const Matrix w = orthogonal_complement(basis.u);
  return full_matrix(basis.projector() + w * b * w.transpose(), 3, 1);
}

TEST(SpectralReport, ProjectorHasZeroRadius) {
  const SubspaceBasis basis = subspace_consensus(5, 2);
  const SpectralReport rep = spectral_report(full_matrix(basis.projector(), 5, 2), basis);
  EXPECT_NEAR(rep.rho_j, 0.0, 1e-12);
  EXPECT_NEAR(rep.rho_i_minus_j, 1.0, 1e-12);
  EXPECT_NEAR(rep.v1, 1.0, 1e-12);
  EXPECT_NEAR(rep.v2, 1.0, 1e-12);
  EXPECT_EQ(rep.epsilon_used, 0.0);
}

TEST(SpectralReport, MetropolisRadiusIsSecondEigenvalue) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Topology t = build_topology(12, 0.3, seed);
    const SubspaceBasis basis = subspace_consensus(12, 3);
    const auto a = build_combination(t, basis, CombinationMode::consensus_metropolis);
    const SpectralReport rep = spectral_report(a, basis);
    Eigen::SelfAdjointEigenSolver<Matrix> es(*a.a_scalar);
    Vector mags = es.eigenvalues().cwiseAbs();
    std::sort(mags.data(), mags.data() + mags.size());
    EXPECT_NEAR(rep.rho_j, mags(mags.size() - 2), 1e-10) << seed;
    EXPECT_NEAR(rep.v1, 1.0, 1e-10);
    EXPECT_NEAR(rep.v2, 1.0, 1e-10);
  }
}

TEST(SpectralReport, NonSymmetricNormsMatchDenseOracle) {
  Matrix b(2, 2);
  b << 0.5, 0.3, 0.0, 0.2;
  const auto a = with_minor_block(b);
  const SubspaceBasis basis = subspace_consensus(3, 1);
  const SpectralReport rep = spectral_report(a, basis);
  EXPECT_NEAR(rep.rho_j, 0.5, 1e-12);
  EXPECT_NEAR(rep.rho_i_minus_j, 0.8, 1e-12);
  // Oracle: V = [U | W Y] with unit-norm eigenvectors Y of B.
  Eigen::EigenSolver<Matrix> es(b);
  const Matrix y = es.eigenvectors().real();
  Matrix v(3, 3);
  v << basis.u, orthogonal_complement(basis.u) * y;
  Eigen::JacobiSVD<Matrix> svd(v);
  EXPECT_NEAR(rep.v2, svd.singularValues()(0), 1e-10);
  EXPECT_NEAR(rep.v1, 1.0 / svd.singularValues()(2), 1e-10);
  EXPECT_GT(rep.v1 * rep.v2, 1.0);
}

TEST(SpectralReport, DefectiveMatrixRejected) {
  Matrix jordan(2, 2);
  jordan << 0.5, 1.0, 0.0, 0.5;
  try {
    spectral_report(with_minor_block(jordan), subspace_consensus(3, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::defective_matrix);
  }
}

TEST(GammaBound, WorkedArithmetic) {
  SpectralReport rep;
  rep.rho_j = 0.5;
  rep.rho_i_minus_j = 0.5;
  EXPECT_DOUBLE_EQ(gamma_bound(rep, 1.0), 0.5);
  EXPECT_EQ(gamma_bound(rep, 0.0), 1.0);
  EXPECT_EQ(gamma_bound(rep, 0.1), 1.0);
  EXPECT_THROW(gamma_bound(rep, -1.0), Error);
}

TEST(GammaBound, NonincreasingInBeta) {
  SpectralReport rep;
  rep.rho_j = 0.8;
  rep.rho_i_minus_j = 1.25;
  rep.v1 = 1.3;
  rep.v2 = 1.1;
  double prev = gamma_bound(rep, 0.0);
  for (double beta = 0.01; beta < 100.0; beta *= 1.7) {
    const double g = gamma_bound(rep, beta);
    EXPECT_LE(g, prev);
    EXPECT_GT(g, 0.0);
    prev = g;
  }
}

TEST(GammaBound, MaxBetaAcrossAgents) {
  std::vector<QuantizerSpec> specs{parse_quantizer("identity", 2), parse_quantizer("anq:omega=0.5,eta=0.1", 2),
                                   parse_quantizer("gossip:q=0.25", 2)};
  EXPECT_DOUBLE_EQ(max_beta_sq(specs), 3.0);
}

TEST(MinorMixing, BoundHoldsOnGammaGrid) {
  const Topology t = build_topology(10, 0.7, 3);
  const SubspaceBasis basis = subspace_smooth(t, 2, 2, 0.1);
  const auto a = build_combination(t, basis, CombinationMode::subspace_lsq);
  const SpectralReport rep = spectral_report(a, basis);
  ASSERT_LT(rep.rho_j, 1.0);
  for (int g = 1; g <= 10; ++g) {
    const double gamma = 0.1 * g;
    EXPECT_LE(minor_mixing_radius(rep, gamma), 1.0 - gamma * (1.0 - rep.rho_j) + 1e-12) << gamma;
  }
}

TEST(RateBound, ZeroChiAndMonotone) {
  EXPECT_NEAR(rate_upper_bound(0.25, 0.001, 0.0, 5), 3.0 * std::log2(3.0) * 5, 1e-12);
  double prev = 0.0;
  for (double chi = 0.0; chi < 10.0; chi = chi * 2.0 + 1e-6) {
    const double r = rate_upper_bound(0.25, 0.001, chi, 5);
    EXPECT_GE(r, prev);
    prev = r;
  }
  EXPECT_THROW(rate_upper_bound(0.0, 0.1, 1.0, 1), Error);
}

SweepSetup small_setup(int iterations = 300) {
  SweepSetup s;
  const Topology t = build_topology(6, 0.6, 4);
  s.basis = subspace_consensus(6, 2);
  s.a = build_combination(t, s.basis, CombinationMode::consensus_metropolis);
  for (int k = 0; k < 6; ++k) s.models.push_back({1.0, 0.01, Vector::Constant(2, 0.3)});
  s.base.mu = 0.02;
  s.base.gamma = 1.0;
  s.base.iterations = iterations;
  s.base.runs = 3;
  s.base.steady_window = 100;
  s.base.quantizers.assign(6, parse_quantizer("identity", 2));
  return s;
}

TEST(Sweep, EmptyGridIsConfigError) {
  try {
    rate_distortion_sweep(small_setup(), {SweepCurve{"uniform", {}}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::config_error);
  }
}

TEST(Sweep, IdentityPointIsUnquantizedBaseline) {
  const SweepSetup s = small_setup();
  SweepCurve c{"identity", {SweepPoint{0.0, std::vector<QuantizerSpec>(6, parse_quantizer("identity", 2))}}};
  const auto rows = rate_distortion_sweep(s, {c});
  ASSERT_EQ(rows.size(), 1U);
  EXPECT_EQ(rows[0].rate, 32.0);
  EXPECT_EQ(rows[0].msd, run(s.base, s.models, s.basis, s.a).steady_msd());
  EXPECT_FALSE(rows[0].diverged);

  std::ostringstream os;
  write_sweep_csv(os, rows);
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "label,param_value,rate_bits,msd,msd_db,diverged_flag");
}

TEST(Sweep, DivergedPointsAreFlagged) {
  SweepSetup s = small_setup(200);
  s.base.mu = 3.0;
  SweepCurve c{"u", {SweepPoint{0.1, std::vector<QuantizerSpec>(6, parse_quantizer("uniform:delta=0.1", 2))}}};
  const auto rows = rate_distortion_sweep(s, {c});
  ASSERT_EQ(rows.size(), 1U);
  EXPECT_TRUE(rows[0].diverged);
}

SweepRow row(double x, double rate, double msd, double se = 0.0) {
  SweepRow r;
  r.label = "c";
  r.param_value = x;
  r.rate = rate;
  r.msd = msd;
  r.msd_se = se;
  r.rate_se = se;
  return r;
}

TEST(Checks, MonotoneWithinTolerance) {
  EXPECT_TRUE(check_monotone({row(3, 1, 3), row(1, 3, 1), row(2, 2, 2)}).ok());
  const auto bad = check_monotone({row(1, 3, 1), row(2, 3.5, 0.5), row(3, 1, 3)});
  EXPECT_EQ(bad.rate_violations, 1);
  EXPECT_EQ(bad.msd_violations, 1);
  // Inside 3σ of the adjacent point.
  EXPECT_TRUE(check_monotone({row(1, 3, 1, 0.1), row(2, 3.2, 0.8, 0.1)}).ok());
}

TEST(Checks, DominanceAtMatchedRates) {
  const std::vector<SweepRow> ref{row(1, 1, 1e-2), row(2, 2, 1e-3), row(3, 3, 1e-4)};
  const auto above = check_dominated({row(0, 1.5, 1e-2), row(0, 2.5, 2e-3), row(0, 9, 1e-9)}, ref);
  EXPECT_EQ(above.compared, 2);
  EXPECT_TRUE(above.ok());
  const auto below = check_dominated({row(0, 2.0, 1e-4)}, ref);
  EXPECT_EQ(below.violations, 1);
  // Log-MSD interpolation: the midpoint of 1e-2 and 1e-3 is √1e-5.
  EXPECT_TRUE(check_dominated({row(0, 1.5, std::sqrt(1e-5) * 1.0001)}, ref).ok());
  EXPECT_FALSE(check_dominated({row(0, 1.5, std::sqrt(1e-5) * 0.9999)}, ref).ok());
}

TEST(Stability, BelowBoundDoesNotDiverge) {
  const Topology t = build_topology(10, 0.7, 3);
  const SubspaceBasis basis = subspace_smooth(t, 2, 2, 0.1);
  const auto a = build_combination(t, basis, CombinationMode::subspace_lsq);
  const SpectralReport rep = spectral_report(a, basis);
  std::vector<DataModel> models;
  const Vector w_star = draw_raw_signal(10, 2, 0.4, 2);
  for (int k = 0; k < 10; ++k) models.push_back({1.0, 0.1, w_star.segment(2 * k, 2)});
  RunConfig cfg;
  cfg.mu = 0.002;
  cfg.iterations = 5000;
  cfg.runs = 2;
  cfg.quantizers.assign(10, parse_quantizer("anq:omega=2,eta=0.001", 2));
  cfg.gamma = 0.5 * gamma_bound(rep, max_beta_sq(cfg.quantizers));
  const RunResult res = run(cfg, models, basis, a);
  EXPECT_FALSE(res.diverged());
  EXPECT_TRUE(std::isfinite(res.steady_msd()));
}

}  // namespace
}  // namespace diffq
