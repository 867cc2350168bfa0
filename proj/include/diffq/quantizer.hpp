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

// Randomized quantizers and compression operators. Every scheme is unbiased,
// E[Q(x)] = x, and satisfies E‖x − Q(x)‖² <= β²‖x‖² + σ² for the budget
// reported by noise_budget().

#ifndef DIFFQ_QUANTIZER_HPP
#define DIFFQ_QUANTIZER_HPP

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "diffq/codec.hpp"
#include "diffq/error.hpp"
#include "diffq/linalg.hpp"
#include "diffq/rng.hpp"

namespace diffq {

namespace scheme {
struct Identity {};
struct Uniform { double delta = 0.0; };
struct Anq { double omega = 0.0; double eta = 0.0; };
struct RandC { int c = 0; };
struct Gossip { double q = 0.0; };
struct Sparsifier { std::vector<double> q; };
struct Qsgd { int s = 0; };
}  // namespace scheme

using Scheme = std::variant<scheme::Identity, scheme::Uniform, scheme::Anq, scheme::RandC,
                            scheme::Gossip, scheme::Sparsifier, scheme::Qsgd>;

enum class SchemeKind { identity, uniform, anq, rand_c, gossip, sparsifier, qsgd };

inline const char* to_string(SchemeKind k) {
  switch (k) {
    case SchemeKind::identity: return "identity";
    case SchemeKind::uniform: return "uniform";
    case SchemeKind::anq: return "anq";
    case SchemeKind::rand_c: return "randc";
    case SchemeKind::gossip: return "gossip";
    case SchemeKind::sparsifier: return "sparsifier";
    case SchemeKind::qsgd: return "qsgd";
  }
  return "?";
}

inline constexpr int kDefaultHighPrecisionBits = 32;

struct QuantizerSpec {
  Scheme scheme;
  int dim = 1;
  int b_hp = kDefaultHighPrecisionBits;

  SchemeKind kind() const { return static_cast<SchemeKind>(scheme.index()); }

  /// Uniform and ANQ produce integer indices that go through the codec.
  bool emits_indices() const { return kind() == SchemeKind::uniform || kind() == SchemeKind::anq; }

  void validate() const {
    require(dim >= 1, ErrorCode::invalid_argument, "quantizer dimension must be positive");
    require(b_hp >= 1, ErrorCode::invalid_argument, "B_HP must be positive");
    std::visit(
        [this](const auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, scheme::Uniform>) {
            require(s.delta > 0.0 && std::isfinite(s.delta), ErrorCode::invalid_argument,
                    "uniform: delta must be positive");
          } else if constexpr (std::is_same_v<T, scheme::Anq>) {
            require(s.omega >= 0.0 && std::isfinite(s.omega), ErrorCode::invalid_argument,
                    "anq: omega must be nonnegative");
            require(s.eta > 0.0 && std::isfinite(s.eta), ErrorCode::invalid_argument,
                    "anq: eta must be positive");
          } else if constexpr (std::is_same_v<T, scheme::RandC>) {
            require(s.c >= 1 && s.c <= dim, ErrorCode::invalid_argument, "randc: c must lie in [1, L]");
          } else if constexpr (std::is_same_v<T, scheme::Gossip>) {
            require(s.q > 0.0 && s.q <= 1.0, ErrorCode::invalid_argument, "gossip: q must lie in (0, 1]");
          } else if constexpr (std::is_same_v<T, scheme::Sparsifier>) {
            require(static_cast<int>(s.q.size()) == dim, ErrorCode::invalid_argument,
                    "sparsifier: need one probability per coordinate");
            for (double q : s.q)
              require(q > 0.0 && q <= 1.0, ErrorCode::invalid_argument,
                      "sparsifier: probabilities must lie in (0, 1]");
          } else if constexpr (std::is_same_v<T, scheme::Qsgd>) {
            require(s.s >= 1, ErrorCode::invalid_argument, "qsgd: s must be at least 1");
          }
        },
        scheme);
  }
};

struct NoiseBudget {
  double beta_sq = 0.0;   // relative term
  double sigma_sq = 0.0;  // absolute floor
};

inline NoiseBudget noise_budget(const QuantizerSpec& spec) {
  const double l = spec.dim;
  return std::visit(
      [l](const auto& s) -> NoiseBudget {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, scheme::Identity>) return {0.0, 0.0};
        else if constexpr (std::is_same_v<T, scheme::Uniform>) return {0.0, l * s.delta * s.delta / 4.0};
        // α = 1/2 in the Jensen split of (ω‖x‖ + √L η)².
        else if constexpr (std::is_same_v<T, scheme::Anq>) return {2.0 * s.omega * s.omega, 2.0 * l * s.eta * s.eta};
        else if constexpr (std::is_same_v<T, scheme::RandC>) return {l / s.c - 1.0, 0.0};
        else if constexpr (std::is_same_v<T, scheme::Gossip>) return {1.0 / s.q - 1.0, 0.0};
        else if constexpr (std::is_same_v<T, scheme::Sparsifier>)
          return {1.0 / *std::min_element(s.q.begin(), s.q.end()) - 1.0, 0.0};
        else return {std::min(l / (double(s.s) * s.s), std::sqrt(l) / s.s), 0.0};
      },
      spec.scheme);
}

// ---------------------------------------------------------------------------
// Companding maps. g is strictly increasing, h = g⁻¹, and the output level of
// index m is h(m).

struct UniformCompander {
  double delta;
  double g(double t) const { return t / delta; }
  double h(double m) const { return delta * m; }
};

/// Logarithmic compander with a = 1/(2 asinh ω), b = ω/η; note
/// ln(ω + √(1+ω²)) = asinh ω. ω = 0 is the uniform limit with step 2η.
struct AnqCompander {
  double omega;
  double eta;

  double g(double t) const {
    if (omega == 0.0) return t / (2.0 * eta);
    const double mag = std::log1p(omega / eta * std::abs(t)) / (2.0 * std::asinh(omega));
    return std::copysign(mag, t);
  }
  double h(double m) const {
    if (omega == 0.0) return 2.0 * eta * m;
    const double mag = eta / omega * std::expm1(2.0 * std::abs(m) * std::asinh(omega));
    return m < 0 ? -mag : mag;
  }
};

namespace detail {

template <class Rng>
double canonical(Rng& rng) {
  return std::generate_canonical<double, 53>(rng);
}

/// ⌈log2 L⌉ bits address one coordinate.
inline int coordinate_bits(int dim) { return std::bit_width(static_cast<unsigned>(dim - 1)); }

}  // namespace detail

// Levels h(m) stay exact while m converts to double without rounding.
inline constexpr double kMaxIndexMagnitude = 0x1.0p53;
inline constexpr int kMaxCellShift = 64;

/// Picks n ∈ {m, m+1}, m = ⌊g(x)⌋, with P[n = m+1] = (x − y_m)/(y_{m+1} − y_m),
/// so that E[h(n)] = x.
template <class Compander, class Rng>
std::int64_t randomized_round(double x, const Compander& comp, Rng& rng) {
  const double gx = comp.g(x);
  if (!std::isfinite(gx) || std::abs(gx) >= kMaxIndexMagnitude)
    fail(ErrorCode::non_finite, "quantizer input out of range");
  auto m = static_cast<std::int64_t>(std::floor(gx));
  // Rounding in g can put x just outside [y_m, y_{m+1}); the cell is re-centred
  // on the exact levels so unbiasedness holds in floating point.
  for (int shift = 0; x < comp.h(static_cast<double>(m)); ++shift) {
    if (shift == kMaxCellShift) fail(ErrorCode::degenerate_cell, "cannot bracket quantizer input");
    --m;
  }
  for (int shift = 0; x >= comp.h(static_cast<double>(m + 1)); ++shift) {
    if (shift == kMaxCellShift) fail(ErrorCode::degenerate_cell, "cannot bracket quantizer input");
    ++m;
  }
  const double lo = comp.h(static_cast<double>(m));
  const double hi = comp.h(static_cast<double>(m + 1));
  if (!(hi > lo)) fail(ErrorCode::degenerate_cell, "quantization cell has zero width");
  const double p_up = (x - lo) / (hi - lo);
  return detail::canonical(rng) < p_up ? m + 1 : m;
}

// ---------------------------------------------------------------------------

struct IndexPayload {
  std::vector<std::int64_t> indices;
};

/// Already-reconstructed values plus the side information a real encoder
/// would transmit for the scheme.
struct ValuePayload {
  Vector values;
  std::vector<int> selected;  // rand-c / sparsifier coordinates
  double norm = 0.0;          // QSGD
  std::vector<int> signs;     // QSGD, ±1
  std::vector<int> levels;    // QSGD, 0..s
};

struct QuantizedMessage {
  SchemeKind kind = SchemeKind::identity;
  std::variant<IndexPayload, ValuePayload> payload;
  double bit_cost = 0.0;
};

template <class Rng>
QuantizedMessage quantize(const QuantizerSpec& spec, const Vector& x, Rng& rng) {
  require(x.size() == spec.dim, ErrorCode::invalid_argument, "input length differs from quantizer dim");
  require(x.allFinite(), ErrorCode::non_finite, "quantizer input is not finite");
  const int l = spec.dim;
  const double b_hp = spec.b_hp;
  QuantizedMessage msg;
  msg.kind = spec.kind();

  auto index_message = [&](const auto& comp) {
    IndexPayload p;
    p.indices.resize(static_cast<std::size_t>(l));
    for (int j = 0; j < l; ++j) p.indices[static_cast<std::size_t>(j)] = randomized_round(x(j), comp, rng);
    msg.bit_cost = codec::sequence_bit_cost(p.indices);
    msg.payload = std::move(p);
  };

  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, scheme::Identity>) {
          msg.payload = ValuePayload{x, {}, 0.0, {}, {}};
          msg.bit_cost = l * b_hp;
        } else if constexpr (std::is_same_v<T, scheme::Uniform>) {
          index_message(UniformCompander{s.delta});
        } else if constexpr (std::is_same_v<T, scheme::Anq>) {
          index_message(AnqCompander{s.omega, s.eta});
        } else if constexpr (std::is_same_v<T, scheme::RandC>) {
          std::vector<int> order(static_cast<std::size_t>(l));
          std::iota(order.begin(), order.end(), 0);
          for (int i = 0; i < s.c; ++i) {
            std::uniform_int_distribution<int> pick(i, l - 1);
            std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(pick(rng))]);
          }
          ValuePayload p;
          p.values = Vector::Zero(l);
          p.selected.assign(order.begin(), order.begin() + s.c);
          std::sort(p.selected.begin(), p.selected.end());
          const double scale = static_cast<double>(l) / s.c;
          for (int j : p.selected) p.values(j) = scale * x(j);
          msg.bit_cost = s.c * (b_hp + detail::coordinate_bits(l));
          msg.payload = std::move(p);
        } else if constexpr (std::is_same_v<T, scheme::Gossip>) {
          const bool send = detail::canonical(rng) < s.q;
          ValuePayload p;
          p.values = send ? Vector(x / s.q) : Vector(Vector::Zero(l));
          msg.bit_cost = send ? l * b_hp : 0.0;
          msg.payload = std::move(p);
        } else if constexpr (std::is_same_v<T, scheme::Sparsifier>) {
          ValuePayload p;
          p.values = Vector::Zero(l);
          for (int j = 0; j < l; ++j) {
            if (detail::canonical(rng) < s.q[static_cast<std::size_t>(j)]) {
              p.selected.push_back(j);
              p.values(j) = x(j) / s.q[static_cast<std::size_t>(j)];
            }
          }
          msg.bit_cost = static_cast<double>(p.selected.size()) * (b_hp + detail::coordinate_bits(l));
          msg.payload = std::move(p);
        } else if constexpr (std::is_same_v<T, scheme::Qsgd>) {
          ValuePayload p;
          p.norm = x.norm();
          p.values = Vector::Zero(l);
          if (p.norm == 0.0) {
            // Nothing to scale; only the (zero) norm is sent.
            msg.bit_cost = b_hp;
            msg.payload = std::move(p);
            return;
          }
          p.signs.resize(static_cast<std::size_t>(l));
          p.levels.resize(static_cast<std::size_t>(l));
          for (int j = 0; j < l; ++j) {
            const double r = s.s * std::abs(x(j)) / p.norm;
            auto m = static_cast<int>(std::floor(r));
            m = std::min(m, s.s);
            const int n = (m < s.s && detail::canonical(rng) < r - m) ? m + 1 : m;
            const int sign = x(j) < 0.0 ? -1 : 1;
            p.signs[static_cast<std::size_t>(j)] = sign;
            p.levels[static_cast<std::size_t>(j)] = n;
            p.values(j) = p.norm * sign * n / s.s;
          }
          msg.bit_cost = b_hp + l + l * std::bit_width(static_cast<unsigned>(s.s - 1));
          msg.payload = std::move(p);
        }
      },
      spec.scheme);
  return msg;
}

/// Output level of index n for an index-emitting scheme.
inline double index_level(const QuantizerSpec& spec, std::int64_t n) {
  if (const auto* u = std::get_if<scheme::Uniform>(&spec.scheme)) return UniformCompander{u->delta}.h(double(n));
  if (const auto* a = std::get_if<scheme::Anq>(&spec.scheme)) return AnqCompander{a->omega, a->eta}.h(double(n));
  fail(ErrorCode::scheme_mismatch, std::string(to_string(spec.kind())) + " does not emit indices");
}

inline Vector reconstruct_indices(const QuantizerSpec& spec, std::span<const std::int64_t> indices) {
  require(static_cast<int>(indices.size()) == spec.dim, ErrorCode::scheme_mismatch,
          "index count differs from quantizer dim");
  Vector out(spec.dim);
  for (int j = 0; j < spec.dim; ++j) out(j) = index_level(spec, indices[static_cast<std::size_t>(j)]);
  return out;
}

inline Vector reconstruct(const QuantizerSpec& spec, const QuantizedMessage& msg) {
  if (msg.kind != spec.kind())
    fail(ErrorCode::scheme_mismatch, std::string("message from ") + to_string(msg.kind) +
                                         " decoded as " + to_string(spec.kind()));
  if (const auto* ip = std::get_if<IndexPayload>(&msg.payload)) return reconstruct_indices(spec, ip->indices);
  const auto& vp = std::get<ValuePayload>(msg.payload);
  require(vp.values.size() == spec.dim, ErrorCode::scheme_mismatch, "payload length differs from quantizer dim");
  return vp.values;
}

// ---------------------------------------------------------------------------
// Monte-Carlo check of E[Q(x)] = x and E‖x − Q(x)‖² <= bound.

struct ContractReport {
  int trials = 0;
  Vector mean_error;     // componentwise mean of Q(x) − x
  Vector mean_error_se;  // componentwise standard error
  double mse = 0.0;
  double mse_se = 0.0;
  double bound = 0.0;
  double sigmas = 4.0;

  bool unbiased() const {
    for (Eigen::Index j = 0; j < mean_error.size(); ++j)
      if (std::abs(mean_error(j)) > sigmas * mean_error_se(j) + 1e-12) return false;
    return true;
  }
  // Rounding slack for the 1e5-term sums; matters when the error norm is
  // constant across draws (rand-c with c = L/2), where mse_se is 0.
  bool within_bound() const { return mse <= bound + sigmas * mse_se + 1e-9 * std::max(bound, 1e-3); }
  bool ok() const { return unbiased() && within_bound(); }
};

/// β²‖x‖² + σ² from noise_budget().
inline double budget_bound(const QuantizerSpec& spec, const Vector& x) {
  const NoiseBudget b = noise_budget(spec);
  return b.beta_sq * x.squaredNorm() + b.sigma_sq;
}

/// (ω‖x‖ + √L η)², the ANQ bound before the Jensen split.
inline double anq_tight_bound(const QuantizerSpec& spec, const Vector& x) {
  const auto& a = std::get<scheme::Anq>(spec.scheme);
  const double t = a.omega * x.norm() + std::sqrt(static_cast<double>(spec.dim)) * a.eta;
  return t * t;
}

inline ContractReport check_contract(const QuantizerSpec& spec, const Vector& x, int trials, std::uint64_t seed,
                                     double bound, double sigmas = 4.0) {
  require(trials >= 2, ErrorCode::invalid_argument, "need at least two trials");
  const auto l = x.size();
  Vector sum = Vector::Zero(l), sq = Vector::Zero(l);
  double e_sum = 0.0, e_sq = 0.0;
  for (int t = 0; t < trials; ++t) {
    auto rng = CounterStream::at(seed, static_cast<std::uint64_t>(t), 0, 0, StreamPurpose::quantizer);
    const Vector err = reconstruct(spec, quantize(spec, x, rng)) - x;
    sum += err;
    sq += err.cwiseProduct(err);
    const double e2 = err.squaredNorm();
    e_sum += e2;
    e_sq += e2 * e2;
  }
  const double n = trials;
  ContractReport rep;
  rep.trials = trials;
  rep.sigmas = sigmas;
  rep.bound = bound;
  rep.mean_error = sum / n;
  rep.mean_error_se =
      ((sq / n - rep.mean_error.cwiseProduct(rep.mean_error)).cwiseMax(0.0) * (n / (n - 1.0)) / n).cwiseSqrt();
  rep.mse = e_sum / n;
  rep.mse_se = std::sqrt(std::max(0.0, e_sq / n - rep.mse * rep.mse) * (n / (n - 1.0)) / n);
  return rep;
}

// ---------------------------------------------------------------------------
// Scheme strings: "identity", "uniform:delta=<f>", "anq:omega=<f>,eta=<f>",
// "randc:c=<int>", "gossip:q=<f>", "sparsifier:q=<f-list>", "qsgd:s=<int>".
// A real value may also be written "<f>*mu", "mu", "mu/<f>" or
// "mu/sqrt(<f>)", resolved against the step size passed in.

namespace detail {

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline double parse_real(const std::string& text, std::optional<double> mu, const std::string& key) {
  std::string t = trim(text);
  double scale = 1.0;
  auto strip_mu = [&](const std::string& suffix) {
    if (t.size() >= suffix.size() && t.compare(t.size() - suffix.size(), suffix.size(), suffix) == 0) {
      if (!mu) fail(ErrorCode::config_error, key + ": 'mu' used but no step size is known");
      scale = *mu;
      t = trim(t.substr(0, t.size() - suffix.size()));
      return true;
    }
    return false;
  };
  if (t == "mu") {
    if (!mu) fail(ErrorCode::config_error, key + ": 'mu' used but no step size is known");
    return *mu;
  }
  if (t.rfind("mu/", 0) == 0) {
    if (!mu) fail(ErrorCode::config_error, key + ": 'mu' used but no step size is known");
    std::string d = trim(t.substr(3));
    bool root = false;
    if (d.rfind("sqrt(", 0) == 0 && d.back() == ')') {
      d = d.substr(5, d.size() - 6);
      root = true;
    }
    const double div = parse_real(d, std::nullopt, key);
    if (!(div > 0.0)) fail(ErrorCode::config_error, key + ": divisor must be positive");
    return *mu / (root ? std::sqrt(div) : div);
  }
  strip_mu("*mu");
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(t, &used);
  } catch (const std::exception&) {
    fail(ErrorCode::config_error, key + ": cannot parse number '" + text + "'");
  }
  if (used != t.size()) fail(ErrorCode::config_error, key + ": trailing characters in '" + text + "'");
  return v * scale;
}

inline int parse_int(const std::string& text, const std::string& key) {
  const std::string t = trim(text);
  std::size_t used = 0;
  long v = 0;
  try {
    v = std::stol(t, &used);
  } catch (const std::exception&) {
    fail(ErrorCode::config_error, key + ": cannot parse integer '" + text + "'");
  }
  if (used != t.size()) fail(ErrorCode::config_error, key + ": trailing characters in '" + text + "'");
  return static_cast<int>(v);
}

}  // namespace detail

inline QuantizerSpec parse_quantizer(const std::string& text, int dim, int b_hp = kDefaultHighPrecisionBits,
                                     std::optional<double> mu = std::nullopt) {
  const std::string t = detail::trim(text);
  const auto colon = t.find(':');
  const std::string name = detail::trim(t.substr(0, colon));
  const std::string args = colon == std::string::npos ? std::string() : t.substr(colon + 1);

  // Split "k=v,k=v"; a value may itself contain commas (sparsifier list), so a
  // comma only starts a new pair when the next token holds '='.
  std::vector<std::pair<std::string, std::string>> kv;
  {
    std::vector<std::string> tokens;
    std::stringstream ss(args);
    std::string tok;
    while (std::getline(ss, tok, ',')) tokens.push_back(tok);
    for (const auto& tk : tokens) {
      const auto eq = tk.find('=');
      if (eq != std::string::npos) {
        kv.emplace_back(detail::trim(tk.substr(0, eq)), tk.substr(eq + 1));
      } else if (!kv.empty()) {
        kv.back().second += "," + tk;
      } else if (!detail::trim(tk).empty()) {
        fail(ErrorCode::config_error, "quantizer '" + text + "': expected key=value");
      }
    }
  }
  auto take = [&](const std::string& key) -> std::string {
    for (auto it = kv.begin(); it != kv.end(); ++it) {
      if (it->first == key) {
        std::string v = it->second;
        kv.erase(it);
        return v;
      }
    }
    fail(ErrorCode::config_error, "quantizer '" + text + "': missing '" + key + "'");
  };

  QuantizerSpec spec;
  spec.dim = dim;
  spec.b_hp = b_hp;
  if (name == "identity") {
    spec.scheme = scheme::Identity{};
  } else if (name == "uniform") {
    spec.scheme = scheme::Uniform{detail::parse_real(take("delta"), mu, "delta")};
  } else if (name == "anq") {
    const double omega = detail::parse_real(take("omega"), mu, "omega");
    const double eta = detail::parse_real(take("eta"), mu, "eta");
    spec.scheme = scheme::Anq{omega, eta};
  } else if (name == "randc") {
    spec.scheme = scheme::RandC{detail::parse_int(take("c"), "c")};
  } else if (name == "gossip") {
    spec.scheme = scheme::Gossip{detail::parse_real(take("q"), mu, "q")};
  } else if (name == "sparsifier") {
    scheme::Sparsifier sp;
    std::stringstream ss(take("q"));
    std::string item;
    while (std::getline(ss, item, ',')) sp.q.push_back(detail::parse_real(item, mu, "q"));
    if (sp.q.size() == 1) sp.q.assign(static_cast<std::size_t>(dim), sp.q.front());
    spec.scheme = std::move(sp);
  } else if (name == "qsgd") {
    spec.scheme = scheme::Qsgd{detail::parse_int(take("s"), "s")};
  } else {
    fail(ErrorCode::config_error, "unknown quantizer scheme '" + name + "'");
  }
  if (!kv.empty()) fail(ErrorCode::config_error, "quantizer '" + text + "': unknown key '" + kv.front().first + "'");
  try {
    spec.validate();
  } catch (const Error& e) {
    fail(ErrorCode::config_error, e.message());
  }
  return spec;
}

inline std::string describe(const QuantizerSpec& spec) {
  std::ostringstream os;
  os << to_string(spec.kind());
  std::visit(
      [&os](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, scheme::Uniform>) os << ":delta=" << format_double(s.delta);
        else if constexpr (std::is_same_v<T, scheme::Anq>)
          os << ":omega=" << format_double(s.omega) << ",eta=" << format_double(s.eta);
        else if constexpr (std::is_same_v<T, scheme::RandC>) os << ":c=" << s.c;
        else if constexpr (std::is_same_v<T, scheme::Gossip>) os << ":q=" << format_double(s.q);
        else if constexpr (std::is_same_v<T, scheme::Sparsifier>) {
          os << ":q=";
          for (std::size_t i = 0; i < s.q.size(); ++i) os << (i ? "," : "") << format_double(s.q[i]);
        } else if constexpr (std::is_same_v<T, scheme::Qsgd>) os << ":s=" << s.s;
      },
      spec.scheme);
  return os.str();
}

}  // namespace diffq

#endif  // DIFFQ_QUANTIZER_HPP
