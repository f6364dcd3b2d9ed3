// Copyright 2026 The moi Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MOI_ERROR_HPP_
#define MOI_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace moi {

enum class ErrorCode {
  kInvalidArgument,
  kInvalidPlayer,
  kPlayerInCoalition,
  kEvaluatorFailure,
  kSizeLimit,
  kExactSizeLimit,
  kDegenerateOrder,
  kIncompleteProfile,
  kMissingOrder,
  kAllZeroStrength,
  kZeroStrength,
  kOrderGridMismatch,
  kDeltasNotRetained,
  kDegenerateGame,
  kBadGrid,
  kShapeMismatch,
  kScorerFailure,
  kHandshakeMismatch,
  kTimeout,
  kRemoteError,
  kBindFailure,
  kProtocolError,
  kIoError,
  kFormatError,
  kConfigError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kInvalidPlayer: return "InvalidPlayer";
    case ErrorCode::kPlayerInCoalition: return "PlayerInCoalition";
    case ErrorCode::kEvaluatorFailure: return "EvaluatorFailure";
    case ErrorCode::kSizeLimit: return "SizeLimit";
    case ErrorCode::kExactSizeLimit: return "ExactSizeLimit";
    case ErrorCode::kDegenerateOrder: return "DegenerateOrder";
    case ErrorCode::kIncompleteProfile: return "IncompleteProfile";
    case ErrorCode::kMissingOrder: return "MissingOrder";
    case ErrorCode::kAllZeroStrength: return "AllZeroStrength";
    case ErrorCode::kZeroStrength: return "ZeroStrength";
    case ErrorCode::kOrderGridMismatch: return "OrderGridMismatch";
    case ErrorCode::kDeltasNotRetained: return "DeltasNotRetained";
    case ErrorCode::kDegenerateGame: return "DegenerateGame";
    case ErrorCode::kBadGrid: return "BadGrid";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kScorerFailure: return "ScorerFailure";
    case ErrorCode::kHandshakeMismatch: return "HandshakeMismatch";
    case ErrorCode::kTimeout: return "Timeout";
    case ErrorCode::kRemoteError: return "RemoteError";
    case ErrorCode::kBindFailure: return "BindFailure";
    case ErrorCode::kProtocolError: return "ProtocolError";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kFormatError: return "FormatError";
    case ErrorCode::kConfigError: return "ConfigError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above; the
/// message is prefixed with the code name so it reads well when printed.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        message_(message) {}

  ErrorCode code() const noexcept { return code_; }
  /// The message without the code prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace moi

#endif  // MOI_ERROR_HPP_
