// Copyright 2026 The msvsr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

// The core library is compiled once per floating-point precision. Each build
// lives in its own inline namespace so a single binary can link both (the
// double build backs the finite-difference gradient checks).
#ifdef MSVSR_USE_DOUBLE
#define MSVSR_PRECISION_NS f64
#else
#define MSVSR_PRECISION_NS f32
#endif

#define MSVSR_NAMESPACE_BEGIN \
  namespace msvsr {           \
  inline namespace MSVSR_PRECISION_NS {
#define MSVSR_NAMESPACE_END \
  }                         \
  }

MSVSR_NAMESPACE_BEGIN

#ifdef MSVSR_USE_DOUBLE
using Real = double;
#else
using Real = float;
#endif

enum class ErrorKind {
  NotFound,
  ShapeMismatch,
  EmptyDataset,
  InvariantViolation,
  InvalidArgument,
  InvalidState,
  InvalidDataset,
  NumericalDivergence,
  ChecksumMismatch,
  VersionError,
  ConfigError,
  IOError,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void raise(ErrorKind kind, const std::string& message);

MSVSR_NAMESPACE_END

#define MSVSR_CHECK(cond, kind, msg)                   \
  do {                                                 \
    if (!(cond)) ::msvsr::raise(::msvsr::ErrorKind::kind, (msg)); \
  } while (0)
