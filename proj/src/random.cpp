// Copyright 2026 The msvsr Authors
// SPDX-License-Identifier: Apache-2.0

#include "msvsr/random.hpp"

#include <sstream>

MSVSR_NAMESPACE_BEGIN

std::string Rng::state() const {
  std::ostringstream out;
  out << engine_;
  return out.str();
}

void Rng::set_state(const std::string& text) {
  std::istringstream in(text);
  in >> engine_;
  MSVSR_CHECK(!in.fail(), InvalidArgument, "malformed generator state");
}

MSVSR_NAMESPACE_END
