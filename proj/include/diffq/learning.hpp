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

// Decentralized learning with differentially quantized exchanges:
//
//   ψ_k = w_k − μ ∇̂J_k(w_k)
//   φ_k = φ_k + Q_k(ψ_k − φ_k)          (replicated at every neighbor)
//   w_k = (1 − γ) φ_k + γ Σ_ℓ A_kℓ φ_ℓ
//
// over streaming linear-regression data d = uᵀw*_k + v.

#ifndef DIFFQ_LEARNING_HPP
#define DIFFQ_LEARNING_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "diffq/codec.hpp"
#include "diffq/combination.hpp"
#include "diffq/error.hpp"
#include "diffq/linalg.hpp"
#include "diffq/quantizer.hpp"
#include "diffq/rng.hpp"

namespace diffq {

/// Regression data at one agent: u ~ N(0, σ²_u I), v ~ N(0, σ²_v).
struct DataModel {
  double sigma_u_sq = 1.0;
  double sigma_v_sq = 0.0;
  Vector w_star;

  void validate() const {
    require(sigma_u_sq > 0.0 && std::isfinite(sigma_u_sq), ErrorCode::invalid_argument,
            "sigma_u^2 must be positive");
    require(sigma_v_sq >= 0.0 && std::isfinite(sigma_v_sq), ErrorCode::invalid_argument,
            "sigma_v^2 must be nonnegative");
    require(w_star.size() >= 1, ErrorCode::invalid_argument, "w_star is empty");
  }

  Matrix covariance() const { return sigma_u_sq * Matrix::Identity(w_star.size(), w_star.size()); }
};

/// Splits a stacked target into per-agent models.
inline std::vector<DataModel> make_data_models(const std::vector<double>& sigma_u_sq,
                                               const std::vector<double>& sigma_v_sq,
                                               const Vector& w_star, const std::vector<int>& block_dims) {
  const std::size_t n = block_dims.size();
  require(sigma_u_sq.size() == n && sigma_v_sq.size() == n, ErrorCode::invalid_argument,
          "one variance pair per agent is required");
  std::vector<DataModel> out(n);
  Eigen::Index off = 0;
  for (std::size_t k = 0; k < n; ++k) {
    out[k].sigma_u_sq = sigma_u_sq[k];
    out[k].sigma_v_sq = sigma_v_sq[k];
    out[k].w_star = w_star.segment(off, block_dims[k]);
    off += block_dims[k];
    out[k].validate();
  }
  require(off == w_star.size(), ErrorCode::invalid_argument, "w_star length mismatch");
  return out;
}

inline std::vector<Matrix> covariances(const std::vector<DataModel>& models) {
  std::vector<Matrix> out;
  out.reserve(models.size());
  for (const auto& m : models) out.push_back(m.covariance());
  return out;
}

/// Instantaneous gradient of ½(d − uᵀw)² for one fresh sample: −u(d − uᵀw).
template <class Rng>
Vector sample_gradient(const DataModel& model, const Vector& w, Rng& rng) {
  const auto l = model.w_star.size();
  std::normal_distribution<double> normal;
  const double su = std::sqrt(model.sigma_u_sq);
  Vector u(l);
  for (Eigen::Index j = 0; j < l; ++j) u(j) = su * normal(rng);
  const double v = std::sqrt(model.sigma_v_sq) * normal(rng);
  const double d = u.dot(model.w_star) + v;
  return -u * (d - u.dot(w));
}

inline CounterStream gradient_stream(std::uint64_t seed, std::uint64_t run, std::uint64_t iteration, int agent) {
  return CounterStream::at(seed, run, iteration, static_cast<std::uint64_t>(agent), StreamPurpose::gradient);
}

inline CounterStream quantizer_stream(std::uint64_t seed, std::uint64_t run, std::uint64_t iteration, int agent) {
  return CounterStream::at(seed, run, iteration, static_cast<std::uint64_t>(agent), StreamPurpose::quantizer);
}

struct AgentState {
  Vector w;
  Vector phi_self;
  std::map<int, Vector> phi_neighbors;  // copies of φ_ℓ for ℓ ∈ N_k \ {k}
};

/// Identifies one synchronous round inside a Monte-Carlo run.
struct StepContext {
  std::uint64_t seed = 0;
  std::uint64_t run = 0;
  std::uint64_t iteration = 1;
};

/// What happened at each agent during one round.
struct StepLog {
  std::vector<Vector> psi;
  std::vector<Vector> chi;  // quantizer input ψ_k − φ_k
  std::vector<Vector> q;    // reconstructed Q_k(χ_k)
  std::vector<double> bits;
};

class Network {
 public:
  Network(CombinationMatrix a, std::vector<QuantizerSpec> specs, double mu, double gamma)
      : a_(std::move(a)), specs_(std::move(specs)), mu_(mu), gamma_(gamma) {
    const int n = a_.topology.n;
    require(static_cast<int>(specs_.size()) == n, ErrorCode::invalid_argument,
            "one quantizer spec per agent is required");
    require(mu > 0.0 && std::isfinite(mu), ErrorCode::invalid_argument, "mu must be positive");
    require(gamma > 0.0 && gamma <= 1.0, ErrorCode::invalid_argument, "gamma must lie in (0, 1]");
    for (int k = 0; k < n; ++k) {
      require(specs_[k].dim == a_.block_dims[k], ErrorCode::invalid_argument,
              "quantizer dim differs from agent dimension");
      specs_[k].validate();
    }
    blocks_.resize(n);
    for (int k = 0; k < n; ++k)
      for (int l : a_.topology.neighborhoods[k]) blocks_[k].emplace_back(l, a_.block(k, l));
    reset();
  }

  int agents() const { return a_.topology.n; }
  double mu() const { return mu_; }
  double gamma() const { return gamma_; }
  const CombinationMatrix& combination() const { return a_; }
  const std::vector<QuantizerSpec>& quantizers() const { return specs_; }
  const std::vector<AgentState>& states() const { return states_; }

  /// w = φ = 0 everywhere, including every stored neighbor copy.
  void reset() {
    const int n = agents();
    states_.assign(n, {});
    for (int k = 0; k < n; ++k) {
      const int mk = a_.block_dims[k];
      states_[k].w = Vector::Zero(mk);
      states_[k].phi_self = Vector::Zero(mk);
      for (int l : a_.topology.neighborhoods[k])
        if (l != k) states_[k].phi_neighbors[l] = Vector::Zero(a_.block_dims[l]);
    }
  }

  /// Replaces every state with the given stacked vectors (w and φ), keeping
  /// neighbor copies consistent.
  void set_state(const Vector& w, const Vector& phi) {
    require(w.size() == a_.a.rows() && phi.size() == a_.a.rows(), ErrorCode::invalid_argument,
            "state length mismatch");
    for (int k = 0; k < agents(); ++k) {
      states_[k].w = w.segment(a_.offset(k), a_.block_dims[k]);
      states_[k].phi_self = phi.segment(a_.offset(k), a_.block_dims[k]);
    }
    for (int k = 0; k < agents(); ++k)
      for (auto& [l, copy] : states_[k].phi_neighbors) copy = states_[l].phi_self;
  }

  Vector stacked_w() const { return stack([](const AgentState& s) -> const Vector& { return s.w; }); }
  Vector stacked_phi() const { return stack([](const AgentState& s) -> const Vector& { return s.phi_self; }); }

  /// Draws one gradient per agent from the run's streams and applies a round.
  StepLog step(const std::vector<DataModel>& models, const StepContext& ctx) {
    require(static_cast<int>(models.size()) == agents(), ErrorCode::invalid_argument,
            "one data model per agent is required");
    std::vector<Vector> grads(agents());
    for (int k = 0; k < agents(); ++k) {
      auto rng = gradient_stream(ctx.seed, ctx.run, ctx.iteration, k);
      grads[k] = sample_gradient(models[k], states_[k].w, rng);
    }
    return step_with_gradients(grads, ctx);
  }

  /// One synchronous round with caller-supplied gradients.
  StepLog step_with_gradients(const std::vector<Vector>& grads, const StepContext& ctx) {
    const int n = agents();
    StepLog log;
    log.psi.resize(n);
    log.chi.resize(n);
    log.q.resize(n);
    log.bits.resize(n);

    for (int k = 0; k < n; ++k) log.psi[k] = states_[k].w - mu_ * grads[k];

    for (int k = 0; k < n; ++k) {
      log.chi[k] = log.psi[k] - states_[k].phi_self;
      auto rng = quantizer_stream(ctx.seed, ctx.run, ctx.iteration, k);
      const QuantizedMessage msg = quantize(specs_[k], log.chi[k], rng);
      log.bits[k] = msg.bit_cost;
      // Index payloads travel as a coded stream; what the neighbors decode is
      // what the sender applies to its own state.
      if (const auto* ip = std::get_if<IndexPayload>(&msg.payload)) {
        const auto received = codec::decode_sequence(codec::encode_sequence(ip->indices));
        log.q[k] = reconstruct_indices(specs_[k], received);
      } else {
        log.q[k] = reconstruct(specs_[k], msg);
      }
    }

    for (int k = 0; k < n; ++k) {
      states_[k].phi_self += log.q[k];
      for (auto& [l, copy] : states_[k].phi_neighbors) copy += log.q[l];
    }

    for (int k = 0; k < n; ++k) {
      auto& s = states_[k];
      Vector mix = Vector::Zero(s.w.size());
      for (const auto& [l, blk] : blocks_[k]) mix.noalias() += blk * (l == k ? s.phi_self : s.phi_neighbors.at(l));
      s.w = (1.0 - gamma_) * s.phi_self + gamma_ * mix;
    }

    if (check_consistency_ && !consistent())
      fail(ErrorCode::state_desync, "neighbor copy of phi diverged from its owner");
    return log;
  }

  /// Every stored copy equals its owner's φ bit for bit.
  bool consistent() const {
    for (int k = 0; k < agents(); ++k)
      for (const auto& [l, copy] : states_[k].phi_neighbors)
        if (copy != states_[l].phi_self) return false;
    return true;
  }

  void set_consistency_check(bool on) { check_consistency_ = on; }

  /// (1/N) Σ_k ‖w°_k − w_k‖².
  double msd(const Vector& w_opt) const {
    double total = 0.0;
    for (int k = 0; k < agents(); ++k)
      total += (w_opt.segment(a_.offset(k), a_.block_dims[k]) - states_[k].w).squaredNorm();
    return total / agents();
  }

  /// Largest |component| of any w or φ; non-finite values map to +inf.
  double max_abs_state() const {
    double m = 0.0;
    for (const auto& s : states_) {
      if (!s.w.allFinite() || !s.phi_self.allFinite()) return std::numeric_limits<double>::infinity();
      m = std::max({m, s.w.cwiseAbs().maxCoeff(), s.phi_self.cwiseAbs().maxCoeff()});
    }
    return m;
  }

 private:
  template <class Get>
  Vector stack(Get get) const {
    Vector out(a_.a.rows());
    for (int k = 0; k < agents(); ++k) out.segment(a_.offset(k), a_.block_dims[k]) = get(states_[k]);
    return out;
  }

  CombinationMatrix a_;
  std::vector<QuantizerSpec> specs_;
  double mu_;
  double gamma_;
  std::vector<std::vector<std::pair<int, Matrix>>> blocks_;
  std::vector<AgentState> states_;
  bool check_consistency_ = false;
};

// ---------------------------------------------------------------------------

inline constexpr double kDivergenceThreshold = 1e12;
inline constexpr int kDefaultSteadyWindow = 500;

struct RunConfig {
  double mu = 0.003;
  double gamma = 1.0;
  int iterations = 1000;
  int runs = 1;
  std::vector<QuantizerSpec> quantizers;  // one per agent
  std::uint64_t seed = 1;
  int workers = 1;
  int steady_window = kDefaultSteadyWindow;
  bool check_consistency = false;
  bool per_agent = false;

  void validate(int agents) const {
    require(mu > 0.0 && std::isfinite(mu), ErrorCode::invalid_argument, "mu must be positive");
    require(gamma > 0.0 && gamma <= 1.0, ErrorCode::invalid_argument, "gamma must lie in (0, 1]");
    require(iterations >= 1, ErrorCode::invalid_argument, "iterations must be positive");
    require(runs >= 1, ErrorCode::invalid_argument, "runs must be positive");
    require(workers >= 1, ErrorCode::invalid_argument, "workers must be positive");
    require(steady_window >= 1, ErrorCode::invalid_argument, "steady window must be positive");
    require(static_cast<int>(quantizers.size()) == agents, ErrorCode::invalid_argument,
            "one quantizer spec per agent is required");
  }
};

struct Divergence {
  int run = 0;
  int iteration = 0;
};

/// Monte-Carlo averaged learning curves. Iteration i is stored at index i − 1.
struct RunResult {
  Vector msd;   // MSD(i)
  Vector rate;  // R(i), bits per node per component
  std::optional<Divergence> divergence;
  int steady_window = kDefaultSteadyWindow;
  Vector chi_ms;      // per agent: mean ‖χ_k‖² over the steady window and runs
  Vector agent_bits;  // per agent: mean r_k over the steady window and runs
  Matrix agent_msd;   // T × N, only with per_agent
  Matrix agent_rate;  // T × N bits per component, only with per_agent
  Vector run_steady_msd;   // per run: mean MSD over the steady window
  Vector run_steady_rate;  // per run: mean R over the steady window

  bool diverged() const { return divergence.has_value(); }
  int window() const { return std::min<int>(steady_window, static_cast<int>(msd.size())); }
  double steady_msd() const { return msd.tail(window()).mean(); }
  double steady_rate() const { return rate.tail(window()).mean(); }
};

inline double to_db(double x) { return 10.0 * std::log10(x); }

namespace detail {

struct RunTrace {
  Vector msd;
  Vector rate_numer;
  Vector chi_sum;
  Vector bits_sum;
  double steady_msd_sum = 0.0;
  double steady_rate_sum = 0.0;
  Matrix agent_msd;
  Matrix agent_rate;
  std::optional<int> diverged_at;
};

inline RunTrace simulate_one(Network net, const std::vector<DataModel>& models, const Vector& w_opt,
                             const RunConfig& cfg, int run, bool uniform_dims,
                             const std::function<void(int, int, const Network&, const StepLog&)>& observer) {
  const int n = net.agents();
  const int t_max = cfg.iterations;
  const int window_start = t_max - std::min(cfg.steady_window, t_max);
  RunTrace tr;
  tr.msd = Vector::Constant(t_max, std::numeric_limits<double>::infinity());
  tr.rate_numer = Vector::Constant(t_max, std::numeric_limits<double>::infinity());
  tr.chi_sum = Vector::Zero(n);
  tr.bits_sum = Vector::Zero(n);
  if (cfg.per_agent) {
    tr.agent_msd = Matrix::Constant(t_max, n, std::numeric_limits<double>::infinity());
    tr.agent_rate = Matrix::Constant(t_max, n, std::numeric_limits<double>::infinity());
  }
  net.set_consistency_check(cfg.check_consistency);
  const auto& a = net.combination();

  for (int i = 1; i <= t_max; ++i) {
    StepLog log;
    try {
      log = net.step(models, {cfg.seed, static_cast<std::uint64_t>(run), static_cast<std::uint64_t>(i)});
    } catch (const Error& e) {
      if (e.code() != ErrorCode::non_finite) throw;
      tr.diverged_at = i;
      return tr;
    }
    if (!(net.max_abs_state() <= kDivergenceThreshold)) {
      tr.diverged_at = i;
      return tr;
    }
    double numer = 0.0;
    for (int k = 0; k < n; ++k) numer += uniform_dims ? log.bits[k] : log.bits[k] / a.block_dims[k];
    tr.msd(i - 1) = net.msd(w_opt);
    tr.rate_numer(i - 1) = numer;
    if (cfg.per_agent) {
      for (int k = 0; k < n; ++k) {
        tr.agent_msd(i - 1, k) =
            (w_opt.segment(a.offset(k), a.block_dims[k]) - net.states()[k].w).squaredNorm();
        tr.agent_rate(i - 1, k) = log.bits[k] / a.block_dims[k];
      }
    }
    if (i > window_start) {
      for (int k = 0; k < n; ++k) {
        tr.chi_sum(k) += log.chi[k].squaredNorm();
        tr.bits_sum(k) += log.bits[k];
      }
      tr.steady_msd_sum += tr.msd(i - 1);
      tr.steady_rate_sum += numer;
    }
    if (observer) observer(run, i, net, log);
  }
  return tr;
}

}  // namespace detail

/// Observer hook called after every round as (run, iteration, network, log).
using StepObserver = std::function<void(int, int, const Network&, const StepLog&)>;

/// Runs cfg.runs independent repetitions from w = φ = 0. Repetitions may be
/// spread over cfg.workers threads; results are reduced in run order, so the
/// output does not depend on scheduling. A run that leaves the finite range
/// (|component| > 1e12) stops; the earliest such event is reported and the
/// averaged curves are +inf from that iteration on.
inline RunResult run(const RunConfig& cfg, const std::vector<DataModel>& models, const SubspaceBasis& basis,
                     const CombinationMatrix& a, const StepObserver& observer = {}) {
  const int n = a.topology.n;
  cfg.validate(n);
  require(static_cast<int>(models.size()) == n, ErrorCode::invalid_argument,
          "one data model per agent is required");
  for (int k = 0; k < n; ++k) {
    models[k].validate();
    require(models[k].w_star.size() == a.block_dims[k], ErrorCode::invalid_argument,
            "w_star block has the wrong size");
  }
  Vector w_star(a.a.rows());
  for (int k = 0; k < n; ++k) w_star.segment(a.offset(k), a.block_dims[k]) = models[k].w_star;
  const Vector w_opt = compute_wopt(basis, covariances(models), w_star);

  const bool uniform_dims =
      std::all_of(a.block_dims.begin(), a.block_dims.end(), [&](int d) { return d == a.block_dims.front(); });
  const double rate_denom = uniform_dims ? static_cast<double>(n) * a.block_dims.front() : static_cast<double>(n);

  const Network proto(a, cfg.quantizers, cfg.mu, cfg.gamma);
  std::vector<detail::RunTrace> traces(static_cast<std::size_t>(cfg.runs));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(cfg.workers));
  auto worker = [&](int id) {
    try {
      for (int r = id; r < cfg.runs; r += cfg.workers)
        traces[static_cast<std::size_t>(r)] =
            detail::simulate_one(proto, models, w_opt, cfg, r, uniform_dims, observer);
    } catch (...) {
      errors[static_cast<std::size_t>(id)] = std::current_exception();
    }
  };
  if (cfg.workers == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (int id = 0; id < cfg.workers; ++id) pool.emplace_back(worker, id);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  const int t_max = cfg.iterations;
  RunResult res;
  res.steady_window = cfg.steady_window;
  res.msd = Vector::Zero(t_max);
  Vector rate_sum = Vector::Zero(t_max);
  res.chi_ms = Vector::Zero(n);
  res.agent_bits = Vector::Zero(n);
  if (cfg.per_agent) {
    res.agent_msd = Matrix::Zero(t_max, n);
    res.agent_rate = Matrix::Zero(t_max, n);
  }
  const int window = std::min(cfg.steady_window, t_max);
  res.run_steady_msd = Vector::Zero(cfg.runs);
  res.run_steady_rate = Vector::Zero(cfg.runs);
  for (int r = 0; r < cfg.runs; ++r) {
    const auto& tr = traces[static_cast<std::size_t>(r)];
    res.run_steady_msd(r) = tr.diverged_at ? std::numeric_limits<double>::infinity() : tr.steady_msd_sum / window;
    res.run_steady_rate(r) =
        tr.diverged_at ? std::numeric_limits<double>::infinity() : tr.steady_rate_sum / (window * rate_denom);
    res.msd += tr.msd;
    rate_sum += tr.rate_numer;
    res.chi_ms += tr.chi_sum;
    res.agent_bits += tr.bits_sum;
    if (cfg.per_agent) {
      res.agent_msd += tr.agent_msd;
      res.agent_rate += tr.agent_rate;
    }
    if (tr.diverged_at && (!res.divergence || *tr.diverged_at < res.divergence->iteration))
      res.divergence = Divergence{r, *tr.diverged_at};
  }
  res.msd /= cfg.runs;
  res.rate = rate_sum / (cfg.runs * rate_denom);
  const double samples = static_cast<double>(cfg.runs) * window;
  res.chi_ms /= samples;
  res.agent_bits /= samples;
  if (cfg.per_agent) {
    res.agent_msd /= cfg.runs;
    res.agent_rate /= cfg.runs;
  }
  if (res.divergence) {
    res.chi_ms.setConstant(std::numeric_limits<double>::infinity());
    res.agent_bits.setConstant(std::numeric_limits<double>::infinity());
  }
  return res;
}

/// Throws NonFinite if the result records a divergence.
inline void require_finite(const RunResult& res) {
  if (res.divergence)
    fail(ErrorCode::non_finite, "run " + std::to_string(res.divergence->run) + " diverged at iteration " +
                                    std::to_string(res.divergence->iteration));
}

/// Consensus case with A = A_scalar ⊗ I_L.
inline RunResult run_diffusion(const RunConfig& cfg, const std::vector<DataModel>& models, const Matrix& a_scalar,
                               const Topology& topology, const StepObserver& observer = {}) {
  require(!models.empty(), ErrorCode::invalid_argument, "no data models");
  const int l = static_cast<int>(models.front().w_star.size());
  const int n = topology.n;
  require(a_scalar.rows() == n && a_scalar.cols() == n, ErrorCode::invalid_argument,
          "A_scalar size differs from the topology");
  const Vector ones = Vector::Ones(n);
  require((a_scalar * ones - ones).cwiseAbs().maxCoeff() <= kConstraintTol &&
              (a_scalar.transpose() * ones - ones).cwiseAbs().maxCoeff() <= kConstraintTol,
          ErrorCode::invalid_argument, "A_scalar is not doubly stochastic");
  CombinationMatrix a;
  a.topology = topology;
  a.block_dims.assign(n, l);
  a.a_scalar = a_scalar;
  a.a = kron_identity(a_scalar, l);
  return run(cfg, models, subspace_consensus(n, l), a, observer);
}

// ---------------------------------------------------------------------------
// Unquantized references sharing the gradient streams of Network::step.

/// w_k ← Σ_ℓ A_kℓ (w_ℓ − μ ∇̂J_ℓ(w_ℓ)); column i − 1 holds the stacked w after round i.
inline Matrix reference_trajectory(const CombinationMatrix& a, const std::vector<DataModel>& models, double mu,
                                   int iterations, std::uint64_t seed, std::uint64_t run) {
  const int n = a.topology.n;
  Vector w = Vector::Zero(a.a.rows());
  Matrix out(a.a.rows(), iterations);
  for (int i = 1; i <= iterations; ++i) {
    Vector psi(w.size());
    for (int k = 0; k < n; ++k) {
      auto rng = gradient_stream(seed, run, static_cast<std::uint64_t>(i), k);
      const Vector wk = w.segment(a.offset(k), a.block_dims[k]);
      psi.segment(a.offset(k), a.block_dims[k]) = wk - mu * sample_gradient(models[k], wk, rng);
    }
    Vector next = Vector::Zero(w.size());
    for (int k = 0; k < n; ++k)
      for (int l : a.topology.neighborhoods[k])
        next.segment(a.offset(k), a.block_dims[k]) += a.block(k, l) * psi.segment(a.offset(l), a.block_dims[l]);
    w = next;
    out.col(i - 1) = w;
  }
  return out;
}

/// Textbook diffusion: ψ_k = w_k − μ ∇̂J_k(w_k), w_k = Σ_ℓ a_kℓ ψ_ℓ.
inline Matrix diffusion_trajectory(const Matrix& a_scalar, const Topology& topology,
                                   const std::vector<DataModel>& models, double mu, int iterations,
                                   std::uint64_t seed, std::uint64_t run) {
  const int n = topology.n;
  const auto l = models.front().w_star.size();
  std::vector<Vector> w(n, Vector::Zero(l)), psi(n);
  Matrix out(static_cast<Eigen::Index>(n) * l, iterations);
  for (int i = 1; i <= iterations; ++i) {
    for (int k = 0; k < n; ++k) {
      auto rng = gradient_stream(seed, run, static_cast<std::uint64_t>(i), k);
      psi[k] = w[k] - mu * sample_gradient(models[k], w[k], rng);
    }
    for (int k = 0; k < n; ++k) {
      Vector acc = Vector::Zero(l);
      for (int nb : topology.neighborhoods[k]) acc += a_scalar(k, nb) * psi[nb];
      w[k] = acc;
      out.col(i - 1).segment(static_cast<Eigen::Index>(k) * l, l) = acc;
    }
  }
  return out;
}

/// Stacked w after each round of the quantized algorithm for one run.
inline Matrix network_trajectory(Network net, const std::vector<DataModel>& models, int iterations,
                                 std::uint64_t seed, std::uint64_t run) {
  Matrix out(net.combination().a.rows(), iterations);
  for (int i = 1; i <= iterations; ++i) {
    net.step(models, {seed, run, static_cast<std::uint64_t>(i)});
    out.col(i - 1) = net.stacked_w();
  }
  return out;
}

// ---------------------------------------------------------------------------

/// Learning-curve CSV: iter, msd, msd_db, avg_bits_per_component and, when
/// per-agent series are present, msd_k / bits_k columns (1-based k).
inline void write_metrics_csv(std::ostream& os, const RunResult& res, const std::string& header_comment = {}) {
  if (!header_comment.empty()) os << "# " << header_comment << '\n';
  const bool per_agent = res.agent_msd.size() > 0;
  os << "iter,msd,msd_db,avg_bits_per_component";
  if (per_agent) {
    for (Eigen::Index k = 0; k < res.agent_msd.cols(); ++k) os << ",msd_" << k + 1;
    for (Eigen::Index k = 0; k < res.agent_rate.cols(); ++k) os << ",bits_" << k + 1;
  }
  os << '\n';
  for (Eigen::Index i = 0; i < res.msd.size(); ++i) {
    os << i + 1 << ',' << format_double(res.msd(i)) << ',' << format_double(to_db(res.msd(i))) << ','
       << format_double(res.rate(i));
    if (per_agent) {
      for (Eigen::Index k = 0; k < res.agent_msd.cols(); ++k) os << ',' << format_double(res.agent_msd(i, k));
      for (Eigen::Index k = 0; k < res.agent_rate.cols(); ++k) os << ',' << format_double(res.agent_rate(i, k));
    }
    os << '\n';
  }
}

}  // namespace diffq

#endif  // DIFFQ_LEARNING_HPP
