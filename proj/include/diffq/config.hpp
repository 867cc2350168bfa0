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

// Experiment configuration: INI-style sections of key = value lines.
//
//   [network]   n, edge_probability | topology_file, seed
//   [model]     l, basis, p_vectors, laplacian_weight, tau, signal_mean,
//               sigma_u_sq = lo, hi   sigma_v_sq = lo, hi   combination
//   [algorithm] mu = list, gamma = <f> | bound | <f>*bound, iterations, runs,
//               quantizer, b_hp, seed, steady_window, check_consistency
//   [output]    directory, per_agent
//   [sweep]     mu, gamma, curve.<label> = <quantizer with {x}> @ <grid>
//
// Grids: "list:a,b,c", "linspace:lo,hi,count", "geomspace:lo,hi,count".

#ifndef DIFFQ_CONFIG_HPP
#define DIFFQ_CONFIG_HPP

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "diffq/analysis.hpp"
#include "diffq/combination.hpp"
#include "diffq/error.hpp"
#include "diffq/graph.hpp"
#include "diffq/learning.hpp"
#include "diffq/quantizer.hpp"
#include "diffq/subspace.hpp"

namespace diffq {

#ifdef DIFFQ_VERSION
inline constexpr const char* kVersion = DIFFQ_VERSION;
#else
inline constexpr const char* kVersion = "0.1.0";
#endif

/// Parsed key/value text, keyed "section.key".
class IniFile {
 public:
  static IniFile parse(std::istream& in) {
    IniFile ini;
    std::string line, section;
    for (int lineno = 1; std::getline(in, line); ++lineno) {
      const auto hash = line.find_first_of("#;");
      if (hash != std::string::npos) line.erase(hash);
      line = detail::trim(line);
      if (line.empty()) continue;
      const std::string where = "line " + std::to_string(lineno);
      if (line.front() == '[') {
        if (line.back() != ']') fail(ErrorCode::config_error, where + ": unterminated section header");
        section = detail::trim(line.substr(1, line.size() - 2));
        if (section.empty()) fail(ErrorCode::config_error, where + ": empty section name");
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) fail(ErrorCode::config_error, where + ": expected key = value");
      if (section.empty()) fail(ErrorCode::config_error, where + ": key outside any section");
      const std::string key = section + "." + detail::trim(line.substr(0, eq));
      if (ini.values_.count(key)) fail(ErrorCode::config_error, key + ": duplicate key");
      ini.values_[key] = detail::trim(line.substr(eq + 1));
      ini.order_.push_back(key);
    }
    return ini;
  }

  static IniFile parse_string(const std::string& text) {
    std::istringstream in(text);
    return parse(in);
  }

  static IniFile load(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::config_error, "cannot open config file '" + path + "'");
    return parse(in);
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  /// Marks `key` as consumed and returns its raw value.
  std::optional<std::string> take(const std::string& key) {
    const auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    used_.insert(key);
    return it->second;
  }

  /// Keys beginning with `prefix`, in file order.
  std::vector<std::string> keys_with_prefix(const std::string& prefix) const {
    std::vector<std::string> out;
    for (const auto& k : order_)
      if (k.rfind(prefix, 0) == 0) out.push_back(k);
    return out;
  }

  /// Throws on the first key that no reader consumed.
  void reject_unknown() const {
    for (const auto& k : order_)
      if (!used_.count(k)) fail(ErrorCode::config_error, k + ": unknown key");
  }

 private:
  std::map<std::string, std::string> values_;
  std::vector<std::string> order_;
  std::set<std::string> used_;
};

namespace detail {

inline std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

inline bool parse_bool(const std::string& text, const std::string& key) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  fail(ErrorCode::config_error, key + ": expected a boolean, got '" + text + "'");
}

inline std::uint64_t parse_seed(const std::string& text, const std::string& key) {
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    if (!text.empty() && text.front() == '-') throw std::invalid_argument("negative");
    v = std::stoull(text, &used);
  } catch (const std::exception&) {
    fail(ErrorCode::config_error, key + ": cannot parse seed '" + text + "'");
  }
  if (used != text.size()) fail(ErrorCode::config_error, key + ": trailing characters in '" + text + "'");
  return v;
}

}  // namespace detail

/// Parses "list:a,b", "linspace:lo,hi,n" or "geomspace:lo,hi,n".
inline std::vector<double> parse_grid(const std::string& text, const std::string& key) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) fail(ErrorCode::config_error, key + ": grid needs a 'kind:' prefix");
  const std::string kind = detail::trim(text.substr(0, colon));
  const auto parts = detail::split(text.substr(colon + 1), ',');
  std::vector<double> out;
  if (kind == "list") {
    for (const auto& p : parts)
      if (!p.empty()) out.push_back(detail::parse_real(p, std::nullopt, key));
  } else if (kind == "linspace" || kind == "geomspace") {
    if (parts.size() != 3) fail(ErrorCode::config_error, key + ": " + kind + " takes lo,hi,count");
    const double lo = detail::parse_real(parts[0], std::nullopt, key);
    const double hi = detail::parse_real(parts[1], std::nullopt, key);
    const int count = detail::parse_int(parts[2], key);
    if (count < 1) fail(ErrorCode::config_error, key + ": count must be positive");
    if (kind == "geomspace" && !(lo > 0.0 && hi > 0.0))
      fail(ErrorCode::config_error, key + ": geomspace bounds must be positive");
    for (int i = 0; i < count; ++i) {
      const double t = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
      out.push_back(kind == "linspace" ? lo + t * (hi - lo) : lo * std::pow(hi / lo, t));
    }
  } else {
    fail(ErrorCode::config_error, key + ": unknown grid kind '" + kind + "'");
  }
  return out;
}

/// gamma as written in a config: a number, or a multiple of the admissible bound.
struct GammaSetting {
  double value = 1.0;
  bool relative_to_bound = false;

  double resolve(double bound) const { return relative_to_bound ? value * bound : value; }
};

inline GammaSetting parse_gamma(const std::string& text, const std::string& key) {
  GammaSetting g;
  std::string t = detail::trim(text);
  if (t == "bound") {
    g.relative_to_bound = true;
    return g;
  }
  const std::string suffix = "*bound";
  if (t.size() > suffix.size() && t.compare(t.size() - suffix.size(), suffix.size(), suffix) == 0) {
    g.relative_to_bound = true;
    t = t.substr(0, t.size() - suffix.size());
  }
  g.value = detail::parse_real(t, std::nullopt, key);
  if (!(g.value > 0.0 && g.value <= 1.0)) fail(ErrorCode::config_error, key + ": must lie in (0, 1]");
  return g;
}

struct SweepCurveSpec {
  std::string label;
  std::string quantizer_template;  // contains {x}
  std::vector<double> grid;
};

struct ExperimentConfig {
  // [network]
  int n = 10;
  std::optional<double> edge_probability = 0.5;
  std::string topology_file;  // resolved against the config directory
  std::uint64_t network_seed = 1;
  // [model]
  int l = 1;
  std::string basis = "smooth";  // smooth | consensus
  int p_vectors = 2;
  double laplacian_weight = 0.1;
  double tau = 3.0;
  double signal_mean = 0.4;
  double sigma_u_lo = 1.0, sigma_u_hi = 1.0;
  double sigma_v_lo = 0.1, sigma_v_hi = 0.1;
  CombinationMode combination = CombinationMode::subspace_lsq;
  // [algorithm]
  std::vector<double> mu{0.003};
  GammaSetting gamma;
  int iterations = 1000;
  int runs = 10;
  std::string quantizer = "identity";
  int b_hp = kDefaultHighPrecisionBits;
  std::uint64_t seed = 1;
  int steady_window = kDefaultSteadyWindow;
  bool check_consistency = false;
  // [output]
  std::string output_directory = "out";
  bool per_agent = false;
  // [sweep]
  std::optional<double> sweep_mu;
  std::optional<GammaSetting> sweep_gamma;
  std::vector<SweepCurveSpec> curves;
};

inline std::string to_string(CombinationMode m) {
  switch (m) {
    case CombinationMode::consensus_metropolis:
      return "consensus-metropolis";
    case CombinationMode::subspace_lsq:
      return "subspace-lsq";
    case CombinationMode::subspace_spectral:
      return "subspace-spectral";
  }
  return "?";
}

/// Reads and validates every field; `base_dir` anchors relative paths.
inline ExperimentConfig parse_experiment(IniFile ini, const std::string& base_dir = ".") {
  ExperimentConfig c;
  auto real = [&](const std::string& key, double& dst) {
    if (auto v = ini.take(key)) dst = detail::parse_real(*v, std::nullopt, key);
  };
  auto integer = [&](const std::string& key, int& dst) {
    if (auto v = ini.take(key)) dst = detail::parse_int(*v, key);
  };
  auto range = [&](const std::string& key, double& lo, double& hi) {
    if (auto v = ini.take(key)) {
      const auto parts = detail::split(*v, ',');
      if (parts.size() == 1) {
        lo = hi = detail::parse_real(parts[0], std::nullopt, key);
      } else if (parts.size() == 2) {
        lo = detail::parse_real(parts[0], std::nullopt, key);
        hi = detail::parse_real(parts[1], std::nullopt, key);
      } else {
        fail(ErrorCode::config_error, key + ": expected 'value' or 'lo, hi'");
      }
      if (lo > hi) fail(ErrorCode::config_error, key + ": lower end exceeds upper end");
    }
  };
  auto check = [](bool ok, const std::string& key, const std::string& what) {
    if (!ok) fail(ErrorCode::config_error, key + ": " + what);
  };

  integer("network.n", c.n);
  check(c.n >= 1, "network.n", "must be at least 1");
  if (auto v = ini.take("network.topology_file")) {
    const std::filesystem::path p(*v);
    c.topology_file = p.is_absolute() ? p.string() : (std::filesystem::path(base_dir) / p).string();
    c.edge_probability.reset();
    check(!ini.has("network.edge_probability"), "network.edge_probability", "conflicts with network.topology_file");
  } else if (auto e = ini.take("network.edge_probability")) {
    c.edge_probability = detail::parse_real(*e, std::nullopt, "network.edge_probability");
    check(*c.edge_probability > 0.0 && *c.edge_probability <= 1.0, "network.edge_probability", "must lie in (0, 1]");
  }
  if (auto v = ini.take("network.seed")) c.network_seed = detail::parse_seed(*v, "network.seed");

  integer("model.l", c.l);
  check(c.l >= 1, "model.l", "must be at least 1");
  if (auto v = ini.take("model.basis")) c.basis = *v;
  check(c.basis == "smooth" || c.basis == "consensus", "model.basis", "must be 'smooth' or 'consensus'");
  integer("model.p_vectors", c.p_vectors);
  real("model.laplacian_weight", c.laplacian_weight);
  check(c.laplacian_weight > 0.0, "model.laplacian_weight", "must be positive");
  real("model.tau", c.tau);
  check(c.tau >= 0.0, "model.tau", "must be nonnegative");
  real("model.signal_mean", c.signal_mean);
  range("model.sigma_u_sq", c.sigma_u_lo, c.sigma_u_hi);
  check(c.sigma_u_lo > 0.0, "model.sigma_u_sq", "must be positive");
  range("model.sigma_v_sq", c.sigma_v_lo, c.sigma_v_hi);
  check(c.sigma_v_lo >= 0.0, "model.sigma_v_sq", "must be nonnegative");
  if (auto v = ini.take("model.combination")) {
    if (*v == "consensus-metropolis")
      c.combination = CombinationMode::consensus_metropolis;
    else if (*v == "subspace-lsq")
      c.combination = CombinationMode::subspace_lsq;
    else if (*v == "subspace-spectral")
      c.combination = CombinationMode::subspace_spectral;
    else
      fail(ErrorCode::config_error, "model.combination: unknown mode '" + *v + "'");
  } else if (c.basis == "consensus") {
    c.combination = CombinationMode::consensus_metropolis;
  }
  if (c.basis == "smooth")
    check(c.p_vectors >= 1 && c.p_vectors < c.n, "model.p_vectors", "must lie in [1, n)");

  if (auto v = ini.take("algorithm.mu")) {
    c.mu.clear();
    for (const auto& p : detail::split(*v, ','))
      if (!p.empty()) c.mu.push_back(detail::parse_real(p, std::nullopt, "algorithm.mu"));
    check(!c.mu.empty(), "algorithm.mu", "needs at least one value");
  }
  for (double m : c.mu) check(m > 0.0 && std::isfinite(m), "algorithm.mu", "values must be positive");
  if (auto v = ini.take("algorithm.gamma")) c.gamma = parse_gamma(*v, "algorithm.gamma");
  integer("algorithm.iterations", c.iterations);
  check(c.iterations >= 1, "algorithm.iterations", "must be positive");
  integer("algorithm.runs", c.runs);
  check(c.runs >= 1, "algorithm.runs", "must be positive");
  if (auto v = ini.take("algorithm.quantizer")) c.quantizer = *v;
  integer("algorithm.b_hp", c.b_hp);
  check(c.b_hp >= 1, "algorithm.b_hp", "must be positive");
  if (auto v = ini.take("algorithm.seed")) c.seed = detail::parse_seed(*v, "algorithm.seed");
  integer("algorithm.steady_window", c.steady_window);
  check(c.steady_window >= 1, "algorithm.steady_window", "must be positive");
  if (auto v = ini.take("algorithm.check_consistency"))
    c.check_consistency = detail::parse_bool(*v, "algorithm.check_consistency");
  // Resolve the quantizer once per step size so bad strings fail before any run.
  for (double m : c.mu) {
    try {
      parse_quantizer(c.quantizer, c.l, c.b_hp, m);
    } catch (const Error& e) {
      fail(ErrorCode::config_error, std::string("algorithm.quantizer: ") + e.message());
    }
  }

  if (auto v = ini.take("output.directory")) c.output_directory = *v;
  if (auto v = ini.take("output.per_agent")) c.per_agent = detail::parse_bool(*v, "output.per_agent");

  if (auto v = ini.take("sweep.mu")) {
    c.sweep_mu = detail::parse_real(*v, std::nullopt, "sweep.mu");
    check(*c.sweep_mu > 0.0, "sweep.mu", "must be positive");
  }
  if (auto v = ini.take("sweep.gamma")) c.sweep_gamma = parse_gamma(*v, "sweep.gamma");
  for (const auto& key : ini.keys_with_prefix("sweep.curve.")) {
    const std::string text = *ini.take(key);
    SweepCurveSpec curve;
    curve.label = key.substr(std::string("sweep.curve.").size());
    check(!curve.label.empty(), key, "curve label is empty");
    const auto at = text.find('@');
    check(at != std::string::npos, key, "expected '<quantizer> @ <grid>'");
    curve.quantizer_template = detail::trim(text.substr(0, at));
    check(curve.quantizer_template.find("{x}") != std::string::npos, key, "quantizer template lacks {x}");
    curve.grid = parse_grid(detail::trim(text.substr(at + 1)), key);
    const double mu = c.sweep_mu.value_or(c.mu.front());
    for (double x : curve.grid) {
      std::string q = curve.quantizer_template;
      q.replace(q.find("{x}"), 3, format_double(x));
      try {
        parse_quantizer(q, c.l, c.b_hp, mu);
      } catch (const Error& e) {
        fail(ErrorCode::config_error, key + ": " + e.message());
      }
    }
    c.curves.push_back(std::move(curve));
  }

  ini.reject_unknown();
  return c;
}

inline ExperimentConfig load_experiment(const std::string& path) {
  const std::filesystem::path p(path);
  return parse_experiment(IniFile::load(path), p.has_parent_path() ? p.parent_path().string() : ".");
}

// ---------------------------------------------------------------------------

/// Everything a run needs, built from a validated config.
struct ResolvedSetup {
  Topology topology;
  SubspaceBasis basis;
  CombinationMatrix a;
  std::vector<DataModel> models;
  std::vector<double> sigma_u_sq;
  std::vector<double> sigma_v_sq;
};

/// Per-agent variances drawn uniformly from the configured ranges with the
/// network seed.
inline void draw_variances(const ExperimentConfig& c, std::vector<double>& su, std::vector<double>& sv) {
  auto rng = CounterStream::at(c.network_seed, 0, 0, 0, StreamPurpose::variance);
  su.resize(static_cast<std::size_t>(c.n));
  sv.resize(static_cast<std::size_t>(c.n));
  for (int k = 0; k < c.n; ++k) {
    su[static_cast<std::size_t>(k)] = c.sigma_u_lo + (c.sigma_u_hi - c.sigma_u_lo) * rng.uniform();
    sv[static_cast<std::size_t>(k)] = c.sigma_v_lo + (c.sigma_v_hi - c.sigma_v_lo) * rng.uniform();
  }
}

inline ResolvedSetup resolve_setup(const ExperimentConfig& c) {
  ResolvedSetup s;
  if (c.n == 1)
    s.topology = detail::topology_from_adjacency(Matrix::Zero(1, 1));
  else if (!c.topology_file.empty())
    s.topology = build_topology(c.n, read_edge_list(c.topology_file), c.network_seed);
  else
    s.topology = build_topology(c.n, *c.edge_probability, c.network_seed);

  if (c.basis == "consensus" || c.n == 1)
    s.basis = subspace_consensus(c.n, c.l);
  else
    s.basis = subspace_smooth(s.topology, c.p_vectors, c.l, c.laplacian_weight);

  if (c.n == 1) {
    // A single agent has nothing to mix: A = I.
    s.a.topology = s.topology;
    s.a.block_dims = s.basis.block_dims;
    s.a.a_scalar = Matrix(Matrix::Identity(1, 1));
    s.a.a = Matrix::Identity(c.l, c.l);
  } else {
    s.a = build_combination(s.topology, s.basis, c.combination);
  }

  draw_variances(c, s.sigma_u_sq, s.sigma_v_sq);
  const Vector raw = draw_raw_signal(c.n, c.l, c.signal_mean, c.network_seed);
  const Vector w_star = smooth_signal(laplacian(s.topology, c.laplacian_weight), raw, c.tau, c.l);
  s.models = make_data_models(s.sigma_u_sq, s.sigma_v_sq, w_star, s.basis.block_dims);
  return s;
}

inline std::vector<QuantizerSpec> agent_quantizers(const std::string& text, const ExperimentConfig& c, double mu) {
  return std::vector<QuantizerSpec>(static_cast<std::size_t>(c.n), parse_quantizer(text, c.l, c.b_hp, mu));
}

}  // namespace diffq

#endif  // DIFFQ_CONFIG_HPP
