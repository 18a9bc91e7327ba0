// Copyright 2026 The Truncheck Authors.
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

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace truncheck {

/// Failure categories raised by the library. Each maps to one of the
/// documented error conditions of an operation.
enum class ErrorKind {
  kInvalidArgument,
  kUnknownConstant,
  kDegenerateMeasure,
  kDegreeOutOfRange,
  kDimensionMismatch,
  kConstantPolynomial,
  kDomainTooLarge,
  kVolumeTooSmall,
  kKOutOfRange,
  kDegenerate,
  kNotPositiveDefinite,
  kInsufficientPoints,
  kFeasibilityFailed,
  kPrecondition,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "invalid argument";
    case ErrorKind::kUnknownConstant: return "unknown constant";
    case ErrorKind::kDegenerateMeasure: return "degenerate measure";
    case ErrorKind::kDegreeOutOfRange: return "degree out of range";
    case ErrorKind::kDimensionMismatch: return "dimension mismatch";
    case ErrorKind::kConstantPolynomial: return "constant polynomial";
    case ErrorKind::kDomainTooLarge: return "domain too large";
    case ErrorKind::kVolumeTooSmall: return "volume too small";
    case ErrorKind::kKOutOfRange: return "k out of range";
    case ErrorKind::kDegenerate: return "degenerate";
    case ErrorKind::kNotPositiveDefinite: return "not positive definite";
    case ErrorKind::kInsufficientPoints: return "insufficient non-zero points";
    case ErrorKind::kFeasibilityFailed: return "feasibility failed";
    case ErrorKind::kPrecondition: return "precondition violated";
  }
  return "error";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& detail)
      : std::runtime_error(std::string(to_string(kind)) +
                           (detail.empty() ? "" : ": " + detail)),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& detail = {}) {
  throw Error(kind, detail);
}

}  // namespace truncheck
