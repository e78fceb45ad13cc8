// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace tempo_guard {

/// Precondition violated by the caller (bad size, non-positive side, ...).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The scene flow optimizer produced a non-finite loss or gradient.
class NumericFailure : public std::runtime_error {
 public:
  NumericFailure(const std::string& what, int iteration)
      : std::runtime_error(what + " (iteration " + std::to_string(iteration) + ")"),
        iteration_(iteration) {}

  int iteration() const noexcept { return iteration_; }

 private:
  int iteration_;
};

enum class ParseErrorKind {
  kMissingFile,
  kBadHeader,
  kTruncatedRecord,
  kNonFinite,
  kOutOfOrder,
  kIo,
};

const char* to_string(ParseErrorKind kind) noexcept;

/// Failure while reading or writing a frame file.
class ParseError : public std::runtime_error {
 public:
  ParseError(ParseErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ParseErrorKind kind() const noexcept { return kind_; }

 private:
  ParseErrorKind kind_;
};

}  // namespace tempo_guard
