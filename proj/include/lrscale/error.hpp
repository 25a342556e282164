// Copyright 2026 The lrscale Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lrscale {

// Numeric values match the lrs_status codes of the C API.
enum class ErrorCode : int {
  InvalidArgument = 1,
  Parse = 2,
  Duplicate = 3,
  Underdetermined = 4,
  Degenerate = 5,
  NoInteriorOptimum = 6,
  NotConverged = 7,
  PlanComplete = 8,
  ShapeMismatch = 9,
  UnitMismatch = 10,
  OutOfTrustRegion = 11,
  Diverged = 12,
  Io = 13,
  Internal = 99,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace lrscale
