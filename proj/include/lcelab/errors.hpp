/*
 * Copyright 2026 The lce-lab Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>

namespace lcelab {

enum class ErrorCode {
    InvalidInput,         ///< non-finite entries, bad parameters, malformed data
    DimensionMismatch,    ///< operand shapes do not fit together
    OutOfRange,           ///< rank / index argument outside its admissible range
    NotPsd,               ///< asymmetric or clearly negative "covariance"
    IncompatibleRanges,   ///< ran A is not contained in ran B (Douglas factor)
    InconsistentMoments,  ///< moments that no joint law can produce
    IncompatibleCase,     ///< ran C_VU not inside ran C_V; use a truncated or regularised fit
    SingularCovariance    ///< an inverse was requested for a singular matrix
};

inline const char* to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::InvalidInput: return "invalid-input";
    case ErrorCode::DimensionMismatch: return "dimension-mismatch";
    case ErrorCode::OutOfRange: return "out-of-range";
    case ErrorCode::NotPsd: return "not-psd";
    case ErrorCode::IncompatibleRanges: return "incompatible-ranges";
    case ErrorCode::InconsistentMoments: return "inconsistent-moments";
    case ErrorCode::IncompatibleCase: return "incompatible-case";
    case ErrorCode::SingularCovariance: return "singular-covariance";
    }
    return "unknown";
}

/// Single exception type for the library. `residual()` carries the offending
/// residual norm for range/compatibility failures and is 0 otherwise.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what, double residual = 0.0)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code),
          residual_(residual) {}

    ErrorCode code() const noexcept { return code_; }
    double residual() const noexcept { return residual_; }

private:
    ErrorCode code_;
    double residual_;
};

namespace detail {

inline void require(bool condition, ErrorCode code, const std::string& what) {
    if (!condition) throw Error(code, what);
}

} // namespace detail
} // namespace lcelab
