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

#ifndef DIFFQ_LINALG_HPP
#define DIFFQ_LINALG_HPP

#include <Eigen/Dense>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <string>

#include "diffq/error.hpp"

namespace diffq {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Tolerances shared by the graph/subspace module.
inline constexpr double kConstraintTol = 1e-8;
inline constexpr double kOrthonormalTol = 1e-10;

/// Kronecker product a ⊗ I_l.
inline Matrix kron_identity(const Matrix& a, int l) {
  Matrix out = Matrix::Zero(a.rows() * l, a.cols() * l);
  for (Eigen::Index r = 0; r < a.rows(); ++r)
    for (Eigen::Index c = 0; c < a.cols(); ++c)
      if (a(r, c) != 0.0) out.block(r * l, c * l, l, l).diagonal().setConstant(a(r, c));
  return out;
}

/// Shortest decimal that round-trips to the same double.
inline std::string format_double(double v) {
  char buf[32];
  for (int precision = 15; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

/// Row-major CSV, full round-trip precision.
inline void write_csv(std::ostream& os, const Matrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) os << ',';
      os << format_double(m(r, c));
    }
    os << '\n';
  }
}

inline void write_csv(const std::string& path, const Matrix& m) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorCode::io_error, "cannot open " + path);
  write_csv(out, m);
}

}  // namespace diffq

#endif  // DIFFQ_LINALG_HPP
