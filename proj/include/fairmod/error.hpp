/*
 * Copyright 2026 The FairMod Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
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

namespace fairmod {

enum class ErrorKind {
  kInvalidArgument,
  kMissingColumn,
  kNonBinaryCell,
  kDuplicateColumn,
  kRoleOverlap,
  kNameCollision,
  kLengthMismatch,
  kIndexOutOfRange,
  kSolverFailure,
  kMalformedInput,
  kVersionMismatch,
  kFingerprintMismatch,
  kSearchSpaceTooLarge,
  kIo,
};

inline const char* ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "invalid argument";
    case ErrorKind::kMissingColumn: return "missing column";
    case ErrorKind::kNonBinaryCell: return "non-binary cell";
    case ErrorKind::kDuplicateColumn: return "duplicate column";
    case ErrorKind::kRoleOverlap: return "role overlap";
    case ErrorKind::kNameCollision: return "name collision";
    case ErrorKind::kLengthMismatch: return "length mismatch";
    case ErrorKind::kIndexOutOfRange: return "index out of range";
    case ErrorKind::kSolverFailure: return "solver failure";
    case ErrorKind::kMalformedInput: return "malformed input";
    case ErrorKind::kVersionMismatch: return "version mismatch";
    case ErrorKind::kFingerprintMismatch: return "fingerprint mismatch";
    case ErrorKind::kSearchSpaceTooLarge: return "search space too large";
    case ErrorKind::kIo: return "i/o error";
  }
  return "error";
}

// Every failure raised by the library carries a kind so callers (the CLI in
// particular) can map it to a stable exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(ErrorKindName(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace fairmod
