// Copyright 2026 The kgd Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace kgd {

/// Coarse failure category. The CLI maps each one to its own exit code.
enum class ErrorKind { Config, Data, Backend, Internal };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message) : Error(ErrorKind::Config, message) {}
};

/// Malformed or inconsistent input files (knowledge, database, logs, labels).
class DataError : public Error {
 public:
  explicit DataError(const std::string& message) : Error(ErrorKind::Data, message) {}
};

/// Scoring/generation backend failure. Transport failures are retryable,
/// protocol violations (wrong arity, out-of-range scores) are not.
class BackendError : public Error {
 public:
  BackendError(const std::string& message, bool retryable)
      : Error(ErrorKind::Backend, message), retryable_(retryable) {}

  bool retryable() const noexcept { return retryable_; }

 private:
  bool retryable_;
};

}  // namespace kgd
