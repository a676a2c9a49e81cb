// Copyright 2026 The codeppl Authors.
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

namespace codeppl {

enum class ErrorKind {
  kInvalidInput,
  kScorerUnavailable,
  kProtocolError,
  kDegenerateDenominator,
  kDegenerateVariance,
  kPerturbationUnavailable,
  kInsufficientSamples,
  kSingleClass,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidInput: return "invalid-input";
    case ErrorKind::kScorerUnavailable: return "scorer-unavailable";
    case ErrorKind::kProtocolError: return "protocol-error";
    case ErrorKind::kDegenerateDenominator: return "degenerate-denominator";
    case ErrorKind::kDegenerateVariance: return "degenerate-variance";
    case ErrorKind::kPerturbationUnavailable: return "perturbation-unavailable";
    case ErrorKind::kInsufficientSamples: return "insufficient-samples";
    case ErrorKind::kSingleClass: return "single-class";
  }
  return "unknown";
}

// Every failure raised by the library carries one of the kinds above so
// callers (the evaluation harness, the CLI exit-status mapping) can branch on
// it without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, bool retriable = false)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind),
        retriable_(retriable) {}

  ErrorKind kind() const noexcept { return kind_; }
  bool retriable() const noexcept { return retriable_; }

  // Degenerate detector inputs are counted as skipped samples rather than
  // aborting an evaluation run.
  bool degenerate() const noexcept {
    return kind_ == ErrorKind::kDegenerateDenominator ||
           kind_ == ErrorKind::kDegenerateVariance;
  }

 private:
  ErrorKind kind_;
  bool retriable_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace codeppl
