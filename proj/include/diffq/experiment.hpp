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

// Command implementations behind tools/diffq.cpp. Each command writes human
// output to the given stream and returns a process exit code.

#ifndef DIFFQ_EXPERIMENT_HPP
#define DIFFQ_EXPERIMENT_HPP

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "diffq/analysis.hpp"
#include "diffq/config.hpp"
#include "diffq/error.hpp"
#include "diffq/learning.hpp"
#include "diffq/quantizer.hpp"

namespace diffq {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 1,
  kExitValidation = 2,
  kExitDivergence = 3,
};

inline int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::config_error:
    case ErrorCode::io_error:
    case ErrorCode::invalid_argument:
      return kExitConfig;
    case ErrorCode::non_finite:
      return kExitDivergence;
    default:
      return kExitValidation;
  }
}

struct CommandOptions {
  std::string config_path;
  int workers = 1;
  std::string out_dir;                 // overrides output.directory when set
  std::optional<std::uint64_t> seed;   // overrides algorithm.seed when set
};

/// A single agent has no complement of Range(U) to mix over, so its report is
/// the empty one (ρ = 0, bound 1).
inline SpectralReport setup_report(const ResolvedSetup& s) {
  if (s.topology.n == 1) return SpectralReport{};
  return spectral_report(s.a, s.basis);
}

inline RunConfig make_run_config(const ExperimentConfig& c, const ResolvedSetup& s, double mu, double gamma,
                                 const std::string& quantizer, int workers) {
  RunConfig rc;
  rc.mu = mu;
  rc.gamma = gamma;
  rc.iterations = c.iterations;
  rc.runs = c.runs;
  rc.quantizers = agent_quantizers(quantizer, c, mu);
  rc.seed = c.seed;
  rc.workers = std::max(1, std::min(workers, c.runs));
  rc.steady_window = c.steady_window;
  rc.check_consistency = c.check_consistency;
  rc.per_agent = c.per_agent;
  rc.validate(s.topology.n);
  return rc;
}

namespace detail {

inline ExperimentConfig load_with_overrides(const CommandOptions& opt) {
  ExperimentConfig c = load_experiment(opt.config_path);
  if (opt.seed) c.seed = *opt.seed;
  if (!opt.out_dir.empty()) c.output_directory = opt.out_dir;
  if (opt.workers < 1) fail(ErrorCode::config_error, "--workers must be positive");
  return c;
}

inline std::filesystem::path prepare_output(const ExperimentConfig& c) {
  const std::filesystem::path dir(c.output_directory);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::io_error, "cannot create output directory '" + dir.string() + "': " + ec.message());
  return dir;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) fail(ErrorCode::io_error, "cannot write '" + path.string() + "'");
  return os;
}

inline void write_setup_manifest(std::ostream& m, const ExperimentConfig& c, const ResolvedSetup& s,
                                 const SpectralReport& rep, const CommandOptions& opt) {
  m << "version = " << kVersion << '\n'
    << "config = " << opt.config_path << '\n'
    << "seed = " << c.seed << '\n'
    << "network.n = " << c.n << '\n'
    << "network.seed = " << c.network_seed << '\n';
  if (!c.topology_file.empty())
    m << "network.topology_file = " << c.topology_file << '\n';
  else if (c.edge_probability)
    m << "network.edge_probability = " << format_double(*c.edge_probability) << '\n';
  m << "network.edges = " << s.topology.edges().size() << '\n'
    << "model.l = " << c.l << '\n'
    << "model.basis = " << (c.n == 1 ? "consensus" : c.basis) << '\n'
    << "model.p = " << s.basis.p << '\n'
    << "model.combination = " << to_string(c.combination) << '\n'
    << "model.laplacian_weight = " << format_double(c.laplacian_weight) << '\n'
    << "model.tau = " << format_double(c.tau) << '\n'
    << "model.signal_mean = " << format_double(c.signal_mean) << '\n';
  m << "model.sigma_u_sq =";
  for (double v : s.sigma_u_sq) m << ' ' << format_double(v);
  m << "\nmodel.sigma_v_sq =";
  for (double v : s.sigma_v_sq) m << ' ' << format_double(v);
  m << '\n'
    << "spectral.rho_j = " << format_double(rep.rho_j) << '\n'
    << "spectral.rho_i_minus_j = " << format_double(rep.rho_i_minus_j) << '\n'
    << "spectral.v1 = " << format_double(rep.v1) << '\n'
    << "spectral.v2 = " << format_double(rep.v2) << '\n'
    << "algorithm.iterations = " << c.iterations << '\n'
    << "algorithm.runs = " << c.runs << '\n'
    << "algorithm.b_hp = " << c.b_hp << '\n'
    << "algorithm.steady_window = " << c.steady_window << '\n'
    << "algorithm.check_consistency = " << (c.check_consistency ? "true" : "false") << '\n'
    << "workers = " << opt.workers << '\n';
}

inline std::string mu_tag(double mu) { return "mu" + format_double(mu); }

}  // namespace detail

/// One learning-curve CSV per step size plus manifest.txt.
inline int cmd_run(const CommandOptions& opt, std::ostream& log) {
  const ExperimentConfig c = detail::load_with_overrides(opt);
  const ResolvedSetup s = resolve_setup(c);
  const SpectralReport rep = setup_report(s);
  const auto dir = detail::prepare_output(c);

  auto manifest = detail::open_output(dir / "manifest.txt");
  detail::write_setup_manifest(manifest, c, s, rep, opt);

  bool diverged = false;
  for (double mu : c.mu) {
    const auto specs = agent_quantizers(c.quantizer, c, mu);
    const double bound = gamma_bound(rep, max_beta_sq(specs));
    const double gamma = c.gamma.resolve(bound);
    const RunConfig rc = make_run_config(c, s, mu, gamma, c.quantizer, opt.workers);
    const RunResult res = run(rc, s.models, s.basis, s.a);

    const std::string name = "metrics_" + detail::mu_tag(mu) + ".csv";
    auto os = detail::open_output(dir / name);
    std::ostringstream header;
    header << "diffq " << kVersion << " seed=" << c.seed << " mu=" << format_double(mu)
           << " gamma=" << format_double(gamma) << " quantizer=" << describe(specs.front());
    write_metrics_csv(os, res, header.str());

    const std::string key = "run." + detail::mu_tag(mu);
    manifest << key << ".file = " << name << '\n'
             << key << ".quantizer = " << describe(specs.front()) << '\n'
             << key << ".gamma_bound = " << format_double(bound) << '\n'
             << key << ".gamma = " << format_double(gamma) << '\n';
    log << "mu=" << format_double(mu) << " gamma=" << format_double(gamma);
    if (res.diverged()) {
      diverged = true;
      manifest << key << ".diverged = run " << res.divergence->run << " iteration " << res.divergence->iteration
               << '\n';
      log << " DIVERGED (run " << res.divergence->run << ", iteration " << res.divergence->iteration << ")\n";
    } else {
      manifest << key << ".steady_msd_db = " << format_double(to_db(res.steady_msd())) << '\n'
               << key << ".steady_bits_per_component = " << format_double(res.steady_rate()) << '\n';
      log << " steady_msd_db=" << std::fixed << std::setprecision(3) << to_db(res.steady_msd())
          << " bits/component=" << res.steady_rate() << std::defaultfloat << std::setprecision(6) << '\n';
    }
    log << "  wrote " << (dir / name).string() << '\n';
  }
  return diverged ? kExitDivergence : kExitOk;
}

/// Prints the combination-matrix checks, the spectral report and the
/// admissible γ for the configured quantizer.
inline int cmd_verify(const CommandOptions& opt, std::ostream& log) {
  const ExperimentConfig c = detail::load_with_overrides(opt);
  const ResolvedSetup s = resolve_setup(c);
  log << "topology: n=" << s.topology.n << " edges=" << s.topology.edges().size() << " connected=yes\n";
  log << "basis: " << (c.n == 1 ? "consensus" : c.basis) << " M=" << s.basis.dim() << " P=" << s.basis.p << '\n';
  log << "combination: " << to_string(c.combination) << '\n';

  bool ok = true;
  auto line = [&](const std::string& name, bool pass, const std::string& detail) {
    log << "  [" << (pass ? "PASS" : "FAIL") << "] " << name << ": " << detail << '\n';
    ok = ok && pass;
  };
  const CombinationChecks chk = check_combination(s.a.a, s.basis, s.topology);
  line("AU = U", chk.au_residual <= kConstraintTol, "residual " + format_double(chk.au_residual));
  line("U^T A = U^T", chk.uta_residual <= kConstraintTol, "residual " + format_double(chk.uta_residual));
  line("sparsity", chk.sparsity_ok(), "max off-pattern " + format_double(chk.off_pattern));
  line("rho(A - P_U) < 1", chk.spectral_ok(), "rho " + format_double(chk.rho));

  const SpectralReport rep = setup_report(s);
  log << "spectral report:\n"
      << "  rho_j = " << format_double(rep.rho_j) << '\n'
      << "  rho_i_minus_j = " << format_double(rep.rho_i_minus_j) << '\n'
      << "  v1 = " << format_double(rep.v1) << '\n'
      << "  v2 = " << format_double(rep.v2) << '\n'
      << "  epsilon_used = " << format_double(rep.epsilon_used) << '\n';
  for (double mu : c.mu) {
    const auto specs = agent_quantizers(c.quantizer, c, mu);
    const double beta = max_beta_sq(specs);
    const double bound = gamma_bound(rep, beta);
    const double gamma = c.gamma.resolve(bound);
    log << "quantizer " << describe(specs.front()) << " (mu=" << format_double(mu)
        << "): beta_sq_max = " << format_double(beta) << " gamma_bound = " << format_double(bound)
        << " gamma = " << format_double(gamma) << '\n';
    if (gamma > bound) log << "  note: gamma exceeds the sufficient bound\n";
  }
  log << (ok ? "all checks passed\n" : "checks failed\n");
  return ok ? kExitOk : kExitValidation;
}

/// Sweep CSV over the [sweep] curves plus monotonicity and dominance checks
/// against the first curve.
inline int cmd_rate_distortion(const CommandOptions& opt, std::ostream& log) {
  const ExperimentConfig c = detail::load_with_overrides(opt);
  if (c.curves.empty()) fail(ErrorCode::config_error, "sweep: no curve.<label> entries");
  const ResolvedSetup s = resolve_setup(c);
  const SpectralReport rep = setup_report(s);
  const double mu = c.sweep_mu.value_or(c.mu.front());
  const GammaSetting gset = c.sweep_gamma.value_or(c.gamma);

  std::vector<SweepCurve> curves;
  double beta = 0.0;
  for (const auto& spec : c.curves) {
    SweepCurve curve;
    curve.label = spec.label;
    for (double x : spec.grid) {
      std::string q = spec.quantizer_template;
      q.replace(q.find("{x}"), 3, format_double(x));
      SweepPoint pt;
      pt.param_value = x;
      pt.quantizers = agent_quantizers(q, c, mu);
      beta = std::max(beta, max_beta_sq(pt.quantizers));
      curve.points.push_back(std::move(pt));
    }
    curves.push_back(std::move(curve));
  }
  // One γ for the whole sweep, admissible for the noisiest point.
  const double bound = gamma_bound(rep, beta);
  const double gamma = gset.resolve(bound);

  SweepSetup setup;
  setup.base = make_run_config(c, s, mu, gamma, "identity", opt.workers);
  setup.models = s.models;
  setup.basis = s.basis;
  setup.a = s.a;
  const std::vector<SweepRow> rows = rate_distortion_sweep(setup, curves);

  const auto dir = detail::prepare_output(c);
  auto os = detail::open_output(dir / "rate_distortion.csv");
  std::ostringstream header;
  header << "diffq " << kVersion << " seed=" << c.seed << " mu=" << format_double(mu)
         << " gamma=" << format_double(gamma);
  write_sweep_csv(os, rows, header.str());
  auto manifest = detail::open_output(dir / "manifest.txt");
  detail::write_setup_manifest(manifest, c, s, rep, opt);
  manifest << "sweep.mu = " << format_double(mu) << '\n'
           << "sweep.gamma_bound = " << format_double(bound) << '\n'
           << "sweep.gamma = " << format_double(gamma) << '\n';
  for (const auto& spec : c.curves) manifest << "sweep.curve." << spec.label << " = " << spec.quantizer_template << '\n';

  bool diverged = false;
  for (const auto& r : rows) diverged = diverged || r.diverged;
  log << "mu=" << format_double(mu) << " gamma=" << format_double(gamma) << " points=" << rows.size() << '\n';
  const std::string ref = curves.front().label;
  for (const auto& curve : curves) {
    const auto mine = rows_with_label(rows, curve.label);
    const MonotonicityReport mono = check_monotone(mine);
    log << "curve " << curve.label << ": monotone rate " << (mono.rate_violations == 0 ? "yes" : "no") << " ("
        << mono.rate_violations << " violations), monotone msd " << (mono.msd_violations == 0 ? "yes" : "no")
        << " (" << mono.msd_violations << " violations)";
    if (curve.label != ref) {
      const DominanceReport dom = check_dominated(mine, rows_with_label(rows, ref));
      log << ", dominated by " << ref << ": " << (dom.ok() ? "yes" : "no") << " (" << dom.compared
          << " compared, " << dom.violations << " violations)";
    }
    log << '\n';
  }
  log << "wrote " << (dir / "rate_distortion.csv").string() << '\n';
  if (diverged) log << "some sweep points diverged (diverged_flag = 1)\n";
  return diverged ? kExitDivergence : kExitOk;
}

/// Canned inputs for the contract check: structured, random and tiny vectors.
inline std::vector<Vector> canned_inputs(int dim, std::uint64_t seed) {
  std::vector<Vector> out;
  out.push_back(Vector::Constant(dim, 0.3));
  Vector alt(dim);
  for (int j = 0; j < dim; ++j) alt(j) = (j % 2 == 0 ? 1.0 : -1.0) * (0.5 + 0.25 * j);
  out.push_back(alt);
  auto rng = CounterStream::at(seed, 0, 0, 0, StreamPurpose::test);
  for (int r = 0; r < 2; ++r) {
    Vector g(dim);
    for (int j = 0; j < dim; ++j) g(j) = rng.normal();
    out.push_back(g);
  }
  Vector tiny = Vector::Zero(dim);
  tiny(0) = 1e-3;
  out.push_back(tiny);
  return out;
}

/// Monte-Carlo unbiasedness and variance-bound check on canned inputs.
inline int cmd_quantizer_test(const std::string& spec_text, int trials, int dim, std::uint64_t seed,
                              int b_hp, std::ostream& log) {
  if (trials < 2) fail(ErrorCode::config_error, "--trials must be at least 2");
  if (dim < 1) fail(ErrorCode::config_error, "--dim must be positive");
  QuantizerSpec spec;
  try {
    spec = parse_quantizer(spec_text, dim, b_hp);
  } catch (const Error& e) {
    fail(ErrorCode::config_error, std::string("--spec: ") + e.message());
  }
  const NoiseBudget nb = noise_budget(spec);
  log << "scheme " << describe(spec) << " L=" << dim << " trials=" << trials << " beta_sq=" << format_double(nb.beta_sq)
      << " sigma_sq=" << format_double(nb.sigma_sq) << '\n';
  const bool exact = std::holds_alternative<scheme::Identity>(spec.scheme);
  const bool anq = std::holds_alternative<scheme::Anq>(spec.scheme);
  bool ok = true;
  int idx = 0;
  for (const Vector& x : canned_inputs(dim, seed)) {
    const double bound = budget_bound(spec, x);
    const ContractReport rep = check_contract(spec, x, trials, seed + static_cast<std::uint64_t>(idx), bound);
    bool pass = rep.ok();
    if (exact) pass = rep.mse == 0.0 && rep.mean_error.cwiseAbs().maxCoeff() == 0.0;
    double worst_z = 0.0;
    for (Eigen::Index j = 0; j < rep.mean_error.size(); ++j)
      if (rep.mean_error_se(j) > 0.0) worst_z = std::max(worst_z, std::abs(rep.mean_error(j)) / rep.mean_error_se(j));
    log << "  input " << idx << " |x|^2=" << format_double(x.squaredNorm()) << " mse=" << format_double(rep.mse)
        << " (se " << format_double(rep.mse_se) << ") bound=" << format_double(bound);
    if (anq) log << " tight_bound=" << format_double(anq_tight_bound(spec, x));
    log << " max|bias|/se=" << format_double(worst_z) << (pass ? " PASS" : " FAIL") << '\n';
    ok = ok && pass;
    ++idx;
  }
  log << (ok ? "contract holds\n" : "contract violated\n");
  return ok ? kExitOk : kExitValidation;
}

}  // namespace diffq

#endif  // DIFFQ_EXPERIMENT_HPP
