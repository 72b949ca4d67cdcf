// Copyright 2026 The ctxpref Authors.
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

#include "ctxpref/error.hpp"

namespace ctxpref {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kZeroMarginal: return "ZeroMarginal";
    case ErrorCode::kEmptyContext: return "EmptyContext";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kInvalidDistribution: return "InvalidDistribution";
    case ErrorCode::kMissingJuryWeights: return "MissingJuryWeights";
    case ErrorCode::kAllZeroWeights: return "AllZeroWeights";
    case ErrorCode::kNonConvergence: return "NonConvergence";
    case ErrorCode::kUnresolvedId: return "UnresolvedId";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kMalformedRecord: return "MalformedRecord";
    case ErrorCode::kMissingSubset: return "MissingSubset";
    case ErrorCode::kScorerFailure: return "ScorerFailure";
    case ErrorCode::kMissingPlaceholderValue: return "MissingPlaceholderValue";
    case ErrorCode::kUnparseableRating: return "UnparseableRating";
    case ErrorCode::kTransportError: return "TransportError";
    case ErrorCode::kInsufficientPool: return "InsufficientPool";
    case ErrorCode::kBackendFailure: return "BackendFailure";
    case ErrorCode::kBoundViolation: return "BoundViolation";
  }
  return "Unknown";
}

}  // namespace ctxpref
