// Copyright 2026 The avsd-dialog Authors
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

#include <cstdint>
#include <stdexcept>
#include <string>

namespace avsd {

enum class ErrorCode : int {
  kInvalidArgument = 1,
  kFormat = 2,
  kSchema = 3,
  kIo = 4,
  kConfig = 5,
  kUsage = 6,
  kInternal = 7,
  kCheckFailed = 8,
};

// Every failure raised by the library is an avsd::Error; the C API maps
// code() onto its status enum.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline Error InvalidArgument(const std::string& what) {
  return Error(ErrorCode::kInvalidArgument, what);
}
inline Error SchemaError(const std::string& what) {
  return Error(ErrorCode::kSchema, what);
}
inline Error IoError(const std::string& what) {
  return Error(ErrorCode::kIo, what);
}
inline Error ConfigError(const std::string& what) {
  return Error(ErrorCode::kConfig, what);
}
inline Error UsageError(const std::string& what) {
  return Error(ErrorCode::kUsage, what);
}
inline Error InternalError(const std::string& what) {
  return Error(ErrorCode::kInternal, what);
}

// Format errors carry the byte offset (or line number) at which decoding
// failed.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : Error(ErrorCode::kFormat,
              what + " (at offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

}  // namespace avsd
