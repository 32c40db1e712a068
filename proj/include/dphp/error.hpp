// Copyright 2026 The dphp Authors
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

#ifndef DPHP_ERROR_HPP_
#define DPHP_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace dphp {

// Error categories. The CLI maps kInvalidArgument, kCapacity, kDegenerateData,
// kIncompatible and kUnsupported to exit code 2 and the rest to exit code 3.
enum class ErrorCode {
  kInvalidArgument,
  kCapacity,
  kDegenerateData,
  kIncompatible,
  kUnsupported,
  kInternal,
  kNumerical,
};

inline const char* ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
      return "invalid-argument";
    case ErrorCode::kCapacity:
      return "capacity";
    case ErrorCode::kDegenerateData:
      return "degenerate-data";
    case ErrorCode::kIncompatible:
      return "incompatible-embedding";
    case ErrorCode::kUnsupported:
      return "unsupported";
    case ErrorCode::kInternal:
      return "internal";
    case ErrorCode::kNumerical:
      return "numerical";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

  bool IsUserError() const {
    return code_ != ErrorCode::kInternal && code_ != ErrorCode::kNumerical;
  }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void Fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void Require(bool condition, const std::string& message) {
  if (!condition) Fail(ErrorCode::kInvalidArgument, message);
}

}  // namespace dphp

#endif  // DPHP_ERROR_HPP_
