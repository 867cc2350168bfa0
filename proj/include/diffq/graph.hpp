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

#ifndef DIFFQ_GRAPH_HPP
#define DIFFQ_GRAPH_HPP

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "diffq/error.hpp"
#include "diffq/linalg.hpp"
#include "diffq/rng.hpp"

namespace diffq {

/// Undirected edge between two 0-based agent indices.
using Edge = std::pair<int, int>;
using EdgeList = std::vector<Edge>;

/// Connected undirected network. Every neighborhood is sorted and contains the
/// agent itself; `adjacency` holds 1 on links (k != l) and 0 elsewhere.
struct Topology {
  int n = 0;
  std::vector<std::vector<int>> neighborhoods;
  Matrix adjacency;

  bool linked(int k, int l) const { return k == l || adjacency(k, l) != 0.0; }
  int degree(int k) const { return static_cast<int>(neighborhoods[k].size()); }

  EdgeList edges() const {
    EdgeList out;
    for (int k = 0; k < n; ++k)
      for (int l : neighborhoods[k])
        if (l > k) out.emplace_back(k, l);
    return out;
  }
};

/// Number of vertices reachable from vertex 0 by breadth-first search.
inline int reachable_count(const Matrix& adjacency) {
  const auto n = static_cast<int>(adjacency.rows());
  if (n == 0) return 0;
  std::vector<char> seen(n, 0);
  std::vector<int> queue{0};
  seen[0] = 1;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const int k = queue[head];
    for (int l = 0; l < n; ++l) {
      if (!seen[l] && adjacency(k, l) != 0.0) {
        seen[l] = 1;
        queue.push_back(l);
      }
    }
  }
  return static_cast<int>(queue.size());
}

inline bool is_connected(const Matrix& adjacency) {
  return reachable_count(adjacency) == adjacency.rows();
}

namespace detail {

inline Topology topology_from_adjacency(Matrix adjacency) {
  Topology t;
  t.n = static_cast<int>(adjacency.rows());
  t.neighborhoods.resize(t.n);
  for (int k = 0; k < t.n; ++k) {
    adjacency(k, k) = 0.0;
    for (int l = 0; l < t.n; ++l)
      if (l == k || adjacency(k, l) != 0.0) t.neighborhoods[k].push_back(l);
  }
  t.adjacency = std::move(adjacency);
  return t;
}

}  // namespace detail

/// Connectivity is either an Erdős–Rényi edge probability or an explicit edge list.
using Connectivity = std::variant<double, EdgeList>;

inline constexpr int kTopologyRetryBudget = 100;

/// Builds a connected topology. Random mode resamples (same seed, next attempt
/// index) until the graph is connected or the retry budget runs out.
inline Topology build_topology(int n, const Connectivity& connectivity, std::uint64_t seed) {
  require(n >= 2, ErrorCode::invalid_argument, "topology needs at least 2 agents");

  if (const auto* edges = std::get_if<EdgeList>(&connectivity)) {
    Matrix adj = Matrix::Zero(n, n);
    for (const auto& [a, b] : *edges) {
      if (a < 0 || b < 0 || a >= n || b >= n)
        fail(ErrorCode::invalid_edge_list, "edge (" + std::to_string(a + 1) + "," +
                                               std::to_string(b + 1) + ") out of range for n=" +
                                               std::to_string(n));
      if (a != b) adj(a, b) = adj(b, a) = 1.0;
    }
    if (!is_connected(adj)) fail(ErrorCode::not_connected, "edge list does not connect all agents");
    return detail::topology_from_adjacency(std::move(adj));
  }

  const double p = std::get<double>(connectivity);
  require(p > 0.0 && p <= 1.0, ErrorCode::invalid_argument, "edge probability must lie in (0, 1]");
  for (int attempt = 0; attempt < kTopologyRetryBudget; ++attempt) {
    auto rng = CounterStream::at(seed, static_cast<std::uint64_t>(attempt), 0, 0,
                                 StreamPurpose::topology);
    Matrix adj = Matrix::Zero(n, n);
    for (int k = 0; k < n; ++k)
      for (int l = k + 1; l < n; ++l)
        if (rng.uniform() < p) adj(k, l) = adj(l, k) = 1.0;
    if (is_connected(adj)) return detail::topology_from_adjacency(std::move(adj));
  }
  fail(ErrorCode::not_connected, "no connected graph after " + std::to_string(kTopologyRetryBudget) +
                                     " attempts (n=" + std::to_string(n) +
                                     ", p=" + std::to_string(p) + ")");
}

/// Parses the plain-text edge list format: one "k l" pair per line, 1-indexed,
/// blank lines and '#' comments ignored. Returns 0-based edges.
inline EdgeList parse_edge_list(std::istream& in) {
  EdgeList edges;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    long a = 0, b = 0;
    std::string rest;
    if (!(ls >> a) || !(ls >> b) || (ls >> rest))
      fail(ErrorCode::invalid_edge_list, "line " + std::to_string(line_no) + ": expected \"k l\"");
    if (a < 1 || b < 1)
      fail(ErrorCode::invalid_edge_list, "line " + std::to_string(line_no) + ": indices are 1-based");
    edges.emplace_back(static_cast<int>(a - 1), static_cast<int>(b - 1));
  }
  return edges;
}

inline EdgeList read_edge_list(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::io_error, "cannot open topology file " + path);
  return parse_edge_list(in);
}

inline void write_edge_list(std::ostream& os, const Topology& t) {
  for (const auto& [a, b] : t.edges()) os << a + 1 << ' ' << b + 1 << '\n';
}

/// Graph Laplacian diag(C·1) − C with c_kl = weight on every link.
inline Matrix laplacian(const Topology& t, double weight) {
  require(weight > 0.0, ErrorCode::invalid_argument, "Laplacian weight must be positive");
  Matrix c = weight * t.adjacency;
  Matrix lap = -c;
  lap.diagonal() += c.rowwise().sum();
  return lap;
}

}  // namespace diffq

#endif  // DIFFQ_GRAPH_HPP
