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

// Acceptance suite: one PASS/FAIL line per criterion. Pass criterion numbers
// as arguments to run a subset. Exit status is 0 only if every selected
// criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "diffq/diffq.hpp"

namespace {

using namespace diffq;

// Pinned tolerances.
constexpr double kSigmas = 4.0;                 // Monte-Carlo bands, criteria 1-2
constexpr int kContractDraws = 100000;          // criteria 1-2
constexpr double kConstraintLimit = 1e-8;       // criterion 4
constexpr double kTrajectoryLimit = 1e-12;      // criterion 5
constexpr double kStepTargetDb = 3.0;           // criterion 6
constexpr double kStepToleranceDb = 1.0;
constexpr double kRateSpreadLimit = 0.15;       // criterion 7
constexpr double kRateTarget = 2.9;
constexpr double kRateTolerance = 0.7;
constexpr double kQsgdRate = 8.4;               // criterion 8
constexpr double kDichotomyDb = 20.0;           // criterion 10
constexpr double kChiRatioTarget = 4.0;         // criterion 12
constexpr double kChiRatioTolerance = 0.5;      // relative

// Desk-scale network shared by criteria 6, 7, 9, 10, 11, 12.
constexpr const char* kDeskConfig =
    "[network]\nn = 20\nedge_probability = 0.6\nseed = 10\n"
    "[model]\nl = 5\nbasis = smooth\np_vectors = 2\ncombination = subspace-lsq\n"
    "laplacian_weight = 0.1\ntau = 3\nsignal_mean = 0.4\n"
    "sigma_u_sq = 0.8, 1.8\nsigma_v_sq = 0.5, 1.5\n"
    "[algorithm]\nseed = 1\n";
constexpr double kDeskMu0 = 0.0015;
constexpr const char* kDeskAnq = "anq:omega=0.25,eta=mu/sqrt(10)";  // η = μ/√(2L)
constexpr int kDeskRuns = 50;
constexpr int kScalingIterations = 12000;
constexpr int kRateIterations = 24000;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double budget_s;  // 0: no separate budget (reuses another criterion's runs)
  std::function<Outcome()> check;
};

int worker_count() { return std::max(1u, std::thread::hardware_concurrency()); }

std::string fmt(double v, int digits = 4) {
  std::ostringstream os;
  os.precision(digits);
  os << v;
  return os.str();
}

// ---------------------------------------------------------------------------

struct Desk {
  ExperimentConfig cfg = parse_experiment(IniFile::parse_string(kDeskConfig));
  ResolvedSetup setup = resolve_setup(cfg);
  SpectralReport report = spectral_report(setup.a, setup.basis);

  std::vector<QuantizerSpec> quantizers(const std::string& text, double mu) const {
    return agent_quantizers(text, cfg, mu);
  }

  double bound(const std::string& text, double mu) const {
    return gamma_bound(report, max_beta_sq(quantizers(text, mu)));
  }

  RunResult run_at(const std::string& text, double mu, double gamma, int iterations, int runs) const {
    RunConfig rc;
    rc.mu = mu;
    rc.gamma = gamma;
    rc.iterations = iterations;
    rc.runs = runs;
    rc.quantizers = quantizers(text, mu);
    rc.seed = cfg.seed;
    rc.workers = std::min(worker_count(), runs);
    return run(rc, setup.models, setup.basis, setup.a);
  }
};

const Desk& desk() {
  static const Desk d;
  return d;
}

// Criterion 6 runs, reused by criterion 11.
const std::vector<RunResult>& scaling_runs() {
  static const std::vector<RunResult> runs = [] {
    const Desk& d = desk();
    const double gamma = d.bound(kDeskAnq, kDeskMu0);
    std::vector<RunResult> out;
    for (double m : {1.0, 2.0, 4.0}) out.push_back(d.run_at(kDeskAnq, m * kDeskMu0, gamma, kScalingIterations, kDeskRuns));
    return out;
  }();
  return runs;
}

// Criterion 7 runs, reused by criterion 12.
const std::vector<RunResult>& rate_runs() {
  static const std::vector<RunResult> runs = [] {
    const Desk& d = desk();
    const double gamma = d.bound(kDeskAnq, kDeskMu0);
    std::vector<RunResult> out;
    for (double m : {1.0, 0.5, 0.25}) out.push_back(d.run_at(kDeskAnq, m * kDeskMu0, gamma, kRateIterations, kDeskRuns));
    return out;
  }();
  return runs;
}

// ---------------------------------------------------------------------------

std::vector<Vector> contract_inputs() {
  // 20 inputs over L ∈ {1, 5, 64}, magnitudes from 1e-3 to 1e2.
  std::vector<Vector> xs;
  auto rng = CounterStream::at(2024, 0, 0, 0, StreamPurpose::test);
  const std::vector<std::pair<int, double>> shapes{
      {1, 0.37},  {1, -2.5}, {1, 1e-3},  {1, 40.0},  {1, -0.999}, {1, 0.5},   {5, 1.0},
      {5, 0.01},  {5, 3.0},  {5, 0.2},   {5, 100.0}, {5, 0.05},   {5, 1.7},   {64, 1.0},
      {64, 0.1},  {64, 5.0}, {64, 0.003}, {64, 0.6}, {64, 20.0},  {64, 0.25}};
  for (const auto& [l, scale] : shapes) {
    Vector x(l);
    for (int j = 0; j < l; ++j) x(j) = scale * rng.normal();
    if (l == 1) x(0) = scale;
    xs.push_back(x);
  }
  return xs;
}

std::vector<QuantizerSpec> contract_schemes(int l) {
  std::vector<QuantizerSpec> out{
      parse_quantizer("identity", l),
      parse_quantizer("uniform:delta=0.3", l),
      parse_quantizer("anq:omega=0.5,eta=0.05", l),
      parse_quantizer("randc:c=" + std::to_string(std::max(1, l / 2)), l),
      parse_quantizer("gossip:q=0.4", l),
      parse_quantizer("qsgd:s=2", l),
  };
  QuantizerSpec sp;
  sp.dim = l;
  scheme::Sparsifier s;
  for (int j = 0; j < l; ++j) s.q.push_back(l == 1 ? 0.35 : 0.2 + 0.6 * j / (l - 1));
  sp.scheme = s;
  out.push_back(sp);
  return out;
}

Outcome criterion_contract() {
  int checked = 0, failed = 0;
  std::string first_failure;
  std::uint64_t seed = 1000;
  for (const Vector& x : contract_inputs()) {
    const int l = static_cast<int>(x.size());
    for (const auto& spec : contract_schemes(l)) {
      const auto rep = check_contract(spec, x, kContractDraws, ++seed, budget_bound(spec, x), kSigmas);
      ++checked;
      if (!rep.ok()) {
        ++failed;
        if (first_failure.empty())
          first_failure = describe(spec) + " L=" + std::to_string(l) + " mse=" + fmt(rep.mse) + " bound=" + fmt(rep.bound);
      }
    }
  }
  std::string d = std::to_string(checked - failed) + "/" + std::to_string(checked) +
                  " (scheme, input) pairs unbiased and within budget at " + fmt(kSigmas) + " s.e.";
  if (failed) d += "; first failure " + first_failure;
  return {failed == 0 && checked == 140, d};
}

Outcome criterion_anq_tight() {
  struct Triple {
    double omega, eta;
    std::vector<double> x;
  };
  const std::vector<Triple> triples{
      {0.25, 0.001, {0.3, -0.2, 0.1, 0.05, -0.4}}, {0.5, 0.02, {0.4, -0.05, 1.3, 0.0}},
      {1.0, 0.1, {2.0}},                            {0.1, 0.05, {0.01, -0.02, 0.03}},
      {2.0, 0.01, {1.0, 1.0}},                      {0.25, 0.5, {0.2, -0.1, 0.0, 0.3}},
      {4.0, 0.001, {-3.0, 0.5, 0.25}},              {0.75, 0.2, {10.0, -10.0, 5.0, 0.1, 0.0, 1.0}},
      {0.05, 0.001, {0.002, 0.004}},                {1.5, 1.0, {0.0, 0.0, 0.0}}};
  int ok = 0;
  double worst = 0.0;
  std::uint64_t seed = 500;
  for (const auto& t : triples) {
    const Vector x = Eigen::Map<const Vector>(t.x.data(), static_cast<Eigen::Index>(t.x.size()));
    const auto spec = parse_quantizer("anq:omega=" + format_double(t.omega) + ",eta=" + format_double(t.eta),
                                      static_cast<int>(x.size()));
    const double bound = anq_tight_bound(spec, x);
    const auto rep = check_contract(spec, x, kContractDraws, ++seed, bound, kSigmas);
    if (rep.within_bound()) ++ok;
    worst = std::max(worst, rep.mse / bound);
  }
  return {ok == 10, std::to_string(ok) + "/10 triples with MSE <= (w|x| + sqrt(L) eta)^2 + " + fmt(kSigmas) +
                        " s.e.; largest MSE/bound " + fmt(worst)};
}

int digits_oracle(std::int64_t n) {
  // ⌈log2(|n| + 1)⌉ by repeated halving.
  unsigned long long m = n < 0 ? 0ULL - static_cast<unsigned long long>(n) : static_cast<unsigned long long>(n);
  int d = 0;
  while (m) {
    m >>= 1;
    ++d;
  }
  return d;
}

Outcome criterion_codec() {
  auto rng = CounterStream::at(77, 0, 0, 0, StreamPurpose::test);
  int exact = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    std::vector<std::int64_t> ns(1 + rng() % 32);
    for (auto& n : ns) {
      const int width = static_cast<int>(rng() % 48);
      const auto mag = width == 0 ? 0 : static_cast<std::int64_t>(rng() >> (64 - width));
      n = (rng() & 1) ? -mag : mag;
    }
    const auto s = codec::encode_sequence(ns);
    bool ok = codec::decode_sequence(s) == ns && codec::decode_sequence(codec::from_ascii(codec::to_ascii(s))) == ns;
    std::size_t symbols = 0;
    for (auto n : ns) {
      const auto word = codec::encode_integer(n);
      ok = ok && static_cast<int>(word.size()) == digits_oracle(n);
      symbols += 1 + static_cast<std::size_t>(digits_oracle(n));
    }
    ok = ok && s.symbols.size() == symbols && s.bit_cost() == codec::kBitsPerSymbol * static_cast<double>(symbols);
    if (ok) ++exact;
  }
  const auto worked = codec::decode_sequence(codec::from_ascii("111p0101p10pp"));
  const bool worked_ok = worked == std::vector<std::int64_t>{7, -10, 2, 0} && codec::partition_index(7) == 3 &&
                         codec::partition_index(-10) == 4 && codec::partition_index(2) == 2 &&
                         codec::partition_index(0) == 0;
  const bool maps_ok = codec::to_ascii(codec::encode_sequence(std::vector<std::int64_t>{-7})) == "000p" &&
                       codec::to_ascii(codec::encode_sequence(std::vector<std::int64_t>{-10})) == "0101p";
  return {exact == 10000 && worked_ok && maps_ok,
          std::to_string(exact) + "/10000 round-trips exact with termwise costs; worked string " +
              (worked_ok ? "decodes to (7,-10,2,0) in cells (3,4,2,0)" : "MISMATCH") + "; -7/-10 mappings " +
              (maps_ok ? "hold" : "MISMATCH")};
}

Outcome criterion_combination() {
  int ok = 0, total = 0;
  double worst_res = 0.0, worst_rho = 0.0;
  for (const auto& [n, p] : std::vector<std::pair<int, double>>{{10, 0.7}, {20, 0.5}}) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      ++total;
      try {
        const Topology t = build_topology(n, p, seed);
        const SubspaceBasis basis = subspace_smooth(t, 2, 2, 0.1);
        const auto a = build_combination(t, basis, CombinationMode::subspace_lsq);
        const auto chk = check_combination(a.a, basis, t);
        const double res = std::max(chk.au_residual, chk.uta_residual);
        worst_res = std::max(worst_res, res);
        worst_rho = std::max(worst_rho, chk.rho);
        if (res <= kConstraintLimit && chk.rho < 1.0 && chk.sparsity_ok()) ++ok;
      } catch (const Error&) {
      }
    }
  }
  const Topology full = build_topology(12, 1.0, 1);
  const SubspaceBasis fb = subspace_smooth(full, 2, 2, 0.1);
  const double proj_err = (build_combination(full, fb, CombinationMode::subspace_lsq).a - fb.projector()).cwiseAbs().maxCoeff();
  return {ok == total && proj_err <= kConstraintLimit,
          std::to_string(ok) + "/" + std::to_string(total) + " graphs valid (max residual " + fmt(worst_res) +
              ", max rho " + fmt(worst_rho) + "); fully connected |A - P_U| = " + fmt(proj_err)};
}

Outcome criterion_consensus() {
  const int n = 10, l = 2;
  const Topology t = build_topology(n, 0.4, 5);
  const auto a = build_combination(t, subspace_consensus(n, l), CombinationMode::consensus_metropolis);
  std::vector<DataModel> models;
  for (int k = 0; k < n; ++k) models.push_back({0.8 + 0.1 * k, 0.05, Vector::Constant(l, 0.1 * k - 0.3)});
  const std::vector<QuantizerSpec> specs(n, parse_quantizer("identity", l));
  const Network net(a, specs, 0.02, 1.0);
  const Matrix got = network_trajectory(net, models, 1000, 3, 0);
  const Matrix ref = diffusion_trajectory(*a.a_scalar, t, models, 0.02, 1000, 3, 0);
  const double diff = (got - ref).cwiseAbs().maxCoeff();
  return {diff <= kTrajectoryLimit, "max |w_subspace - w_diffusion| over 1000 iterations = " + fmt(diff)};
}

Outcome criterion_msd_scaling() {
  const auto& r = scaling_runs();
  for (const auto& x : r)
    if (x.diverged()) return {false, "a run diverged"};
  const double d1 = to_db(r[1].steady_msd()) - to_db(r[0].steady_msd());
  const double d2 = to_db(r[2].steady_msd()) - to_db(r[1].steady_msd());
  const bool ok = std::abs(d1 - kStepTargetDb) <= kStepToleranceDb && std::abs(d2 - kStepTargetDb) <= kStepToleranceDb;
  return {ok, "gamma=" + fmt(desk().bound(kDeskAnq, kDeskMu0)) + "; MSD " + fmt(to_db(r[0].steady_msd())) + " / " +
                  fmt(to_db(r[1].steady_msd())) + " / " + fmt(to_db(r[2].steady_msd())) + " dB; steps " + fmt(d1, 3) +
                  " dB, " + fmt(d2, 3) + " dB (target 3 +/- 1)"};
}

Outcome criterion_rate_bounded() {
  const auto& r = rate_runs();
  double lo = 1e300, hi = 0.0;
  for (const auto& x : r) {
    if (x.diverged()) return {false, "a run diverged"};
    lo = std::min(lo, x.steady_rate());
    hi = std::max(hi, x.steady_rate());
  }
  const double spread = (hi - lo) / lo;
  const bool in_band = std::abs(lo - kRateTarget) <= kRateTolerance && std::abs(hi - kRateTarget) <= kRateTolerance;
  return {spread < kRateSpreadLimit && in_band,
          "bits/component " + fmt(r[0].steady_rate()) + " / " + fmt(r[1].steady_rate()) + " / " + fmt(r[2].steady_rate()) +
              " at mu0, mu0/2, mu0/4; spread " + fmt(100.0 * spread, 3) + "% (< 15%), band 2.9 +/- 0.7"};
}

Outcome criterion_qsgd_rate() {
  const Desk& d = desk();
  const RunResult res = d.run_at("qsgd:s=2", 0.003, 1.0, 50, 2);
  bool exact = !res.diverged();
  for (Eigen::Index i = 0; i < res.rate.size(); ++i) exact = exact && res.rate(i) == kQsgdRate;
  const auto spec = parse_quantizer("qsgd:s=2", 5, 32);
  auto rng = CounterStream::at(1, 0, 0, 0, StreamPurpose::test);
  const double per_vector = quantize(spec, Vector::Constant(5, 0.3), rng).bit_cost;
  return {exact && per_vector == 42.0,
          "bits per vector " + fmt(per_vector) + ", avg bits/component " + fmt(res.rate(0)) + " at every iteration"};
}

Outcome criterion_rate_distortion() {
  const Desk& d = desk();
  const double mu = 0.003;
  SweepSetup setup;
  setup.base.mu = mu;
  setup.base.gamma = 0.88;
  setup.base.iterations = 4000;
  setup.base.runs = 20;
  setup.base.seed = d.cfg.seed;
  setup.base.workers = worker_count();
  setup.base.quantizers = d.quantizers("identity", mu);
  setup.models = d.setup.models;
  setup.basis = d.setup.basis;
  setup.a = d.setup.a;
  const auto grid = parse_grid("geomspace:0.001,0.1,10", "grid");
  std::vector<SweepCurve> curves;
  auto add = [&](const std::string& label, const std::function<std::string(double)>& text) {
    SweepCurve c{label, {}};
    for (double x : grid) c.points.push_back({x, d.quantizers(text(x), mu)});
    curves.push_back(c);
  };
  add("uniform", [](double x) { return "uniform:delta=" + format_double(x); });
  for (const char* w : {"0.1", "0.5", "1.0"})
    add(std::string("anq_w") + w, [w](double x) { return std::string("anq:omega=") + w + ",eta=" + format_double(x); });
  const auto rows = rate_distortion_sweep(setup, curves);

  const auto uni = rows_with_label(rows, "uniform");
  const MonotonicityReport mono = check_monotone(uni);
  bool ok = mono.ok();
  std::string detail = "uniform: " + std::to_string(mono.rate_violations) + " rate / " +
                       std::to_string(mono.msd_violations) + " msd monotonicity violations";
  int diverged = 0;
  for (const auto& r : rows) diverged += r.diverged ? 1 : 0;
  for (const char* w : {"0.1", "0.5", "1.0"}) {
    const auto dom = check_dominated(rows_with_label(rows, std::string("anq_w") + w), uni);
    ok = ok && dom.ok() && dom.compared > 0;
    detail += "; omega=" + std::string(w) + ": " + std::to_string(dom.violations) + "/" + std::to_string(dom.compared) +
              " below uniform";
  }
  detail += "; diverged points " + std::to_string(diverged);
  return {ok && diverged == 0, detail};
}

Outcome criterion_dichotomy() {
  const Desk& d = desk();
  const std::string q = "anq:omega=8,eta=mu/sqrt(10)";
  const double mu = kDeskMu0;
  const double beta = max_beta_sq(d.quantizers(q, mu));
  const double gamma_low = 0.5 * d.bound(q, mu);
  const RunResult low = d.run_at(q, mu, gamma_low, 5000, 10);
  const RunResult high = d.run_at(q, mu, 1.0, 5000, 10);
  if (low.diverged()) return {false, "gamma = 0.5*bound diverged"};
  const double low_db = to_db(low.steady_msd());
  if (high.diverged())
    return {true, "beta^2=" + fmt(beta) + "; gamma=" + fmt(gamma_low) + " stable at " + fmt(low_db) +
                      " dB; gamma=1 diverged"};
  const double high_db = to_db(high.steady_msd());
  return {high_db - low_db >= kDichotomyDb, "beta^2=" + fmt(beta) + "; gamma=" + fmt(gamma_low) + ": " +
                                                 fmt(low_db) + " dB, gamma=1: " + fmt(high_db) + " dB (gap " +
                                                 fmt(high_db - low_db, 3) + " dB, need >= 20)"};
}

Outcome criterion_rate_bound() {
  const auto& r = scaling_runs();
  const int l = desk().cfg.l;
  int ok = 0, total = 0;
  double worst = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double mu = kDeskMu0 * std::pow(2.0, static_cast<double>(i));
    const scheme::Anq a = std::get<scheme::Anq>(desk().quantizers(kDeskAnq, mu).front().scheme);
    for (Eigen::Index k = 0; k < r[i].agent_bits.size(); ++k) {
      const double bound = rate_upper_bound(a.omega, a.eta, r[i].chi_ms(k), l);
      ++total;
      if (r[i].agent_bits(k) <= bound) ++ok;
      worst = std::max(worst, r[i].agent_bits(k) / bound);
    }
  }
  return {ok == total && total > 0, std::to_string(ok) + "/" + std::to_string(total) +
                                        " (agent, mu) pairs below the bound; largest measured/bound " + fmt(worst)};
}

Outcome criterion_chi_scaling() {
  const auto& r = rate_runs();
  const Vector ratio = r[0].chi_ms.cwiseQuotient(r[1].chi_ms);
  const double mean = ratio.mean();
  return {std::abs(mean - kChiRatioTarget) <= kChiRatioTolerance * kChiRatioTarget,
          "mean over agents of E|chi(mu0)|^2 / E|chi(mu0/2)|^2 = " + fmt(mean) + " (range " + fmt(ratio.minCoeff()) +
              " .. " + fmt(ratio.maxCoeff()) + "; target 4 +/- 50%)"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "quantizer contract", 60, criterion_contract},
      {2, "ANQ tight bound", 60, criterion_anq_tight},
      {3, "codec", 60, criterion_codec},
      {4, "combination matrix", 60, criterion_combination},
      {5, "consensus equivalence", 60, criterion_consensus},
      {6, "MSD-mu scaling", 600, criterion_msd_scaling},
      {7, "bit-rate boundedness", 600, criterion_rate_bounded},
      {8, "QSGD rate", 60, criterion_qsgd_rate},
      {9, "rate-distortion monotonicity", 900, criterion_rate_distortion},
      {10, "stability dichotomy", 300, criterion_dichotomy},
      {11, "rate upper bound", 0, criterion_rate_bound},
      {12, "chi scaling", 0, criterion_chi_scaling},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& c : all) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.check();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.budget_s > 0 && secs > c.budget_s) {
      out.pass = false;
      out.detail += "; runtime " + fmt(secs) + " s exceeds " + fmt(c.budget_s) + " s";
    }
    if (!out.pass) ++failures;
    std::printf("%s criterion %2d (%s): %s [%.1f s]\n", out.pass ? "PASS" : "FAIL", c.id, c.name.c_str(),
                out.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
