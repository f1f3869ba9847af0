// Copyright 2026 The kltmps Authors
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

#ifndef KLTMPS_ERROR_HPP_
#define KLTMPS_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace kltmps {

enum class ErrorKind {
  kInvalidArgument,
  kEmptyBatch,
  kSingularDesign,
  kSupportViolation,
  kContinuousContexts,
  kOutOfRange,
  kConfig,
  kIo,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what),
        kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "InvalidArgument";
    case ErrorKind::kEmptyBatch: return "EmptyBatch";
    case ErrorKind::kSingularDesign: return "SingularDesign";
    case ErrorKind::kSupportViolation: return "SupportViolation";
    case ErrorKind::kContinuousContexts: return "ContinuousContexts";
    case ErrorKind::kOutOfRange: return "OutOfRange";
    case ErrorKind::kConfig: return "ConfigError";
    case ErrorKind::kIo: return "IoError";
  }
  return "Error";
}

// Throws kInvalidArgument with `message` unless `condition` holds.
inline void require(bool condition, const std::string& message) {
  if (!condition) throw Error(ErrorKind::kInvalidArgument, message);
}

}  // namespace kltmps

#endif  // KLTMPS_ERROR_HPP_
