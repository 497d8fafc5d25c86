// Copyright 2026 The msvsr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "msvsr/common.hpp"

MSVSR_NAMESPACE_BEGIN

/// Seeded generator used for every random draw in the library.
///
/// Draws are defined on top of raw std::mt19937_64 output so results do not
/// depend on the standard library's distribution implementations:
///   below(n)  = next() % n
///   uniform() = (next() >> 11) * 2^-53        in [0, 1)
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : next() % n; }
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Text form of the full engine state (round-trips through set_state).
  std::string state() const;
  void set_state(const std::string& text);

 private:
  std::mt19937_64 engine_;
};

MSVSR_NAMESPACE_END
