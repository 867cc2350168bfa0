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

#ifndef DIFFQ_ERROR_HPP
#define DIFFQ_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace diffq {

enum class ErrorCode {
  invalid_argument,
  not_connected,
  invalid_edge_list,
  eigen_failure,
  spectral_violation,
  infeasible_constraints,
  singular_projection,
  degenerate_cell,
  scheme_mismatch,
  malformed_stream,
  non_finite,
  state_desync,
  defective_matrix,
  config_error,
  io_error,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "InvalidArgument";
    case ErrorCode::not_connected: return "NotConnected";
    case ErrorCode::invalid_edge_list: return "InvalidEdgeList";
    case ErrorCode::eigen_failure: return "EigenFailure";
    case ErrorCode::spectral_violation: return "SpectralViolation";
    case ErrorCode::infeasible_constraints: return "InfeasibleConstraints";
    case ErrorCode::singular_projection: return "SingularProjection";
    case ErrorCode::degenerate_cell: return "DegenerateCell";
    case ErrorCode::scheme_mismatch: return "SchemeMismatch";
    case ErrorCode::malformed_stream: return "MalformedStream";
    case ErrorCode::non_finite: return "NonFinite";
    case ErrorCode::state_desync: return "StateDesync";
    case ErrorCode::defective_matrix: return "DefectiveMatrix";
    case ErrorCode::config_error: return "ConfigError";
    case ErrorCode::io_error: return "IoError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so that
/// callers (and the CLI exit-code mapping) can dispatch without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), message_(what) {}

  ErrorCode code() const noexcept { return code_; }

  /// The description without the code prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool condition, ErrorCode code, const std::string& what) {
  if (!condition) fail(code, what);
}

}  // namespace diffq

#endif  // DIFFQ_ERROR_HPP
