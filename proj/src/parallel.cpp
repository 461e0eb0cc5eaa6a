// Copyright 2026 The iotyper Authors
// SPDX-License-Identifier: Apache-2.0

#include "iotyper/parallel.hpp"

#include <omp.h>

#include <charconv>
#include <cstdlib>
#include <string>

namespace iotyper {

std::optional<int> parse_thread_cap(std::string_view text) {
  int value = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end || value <= 0) return std::nullopt;
  return value;
}

int configure_threads_from_env() {
  if (const char* env = std::getenv(std::string(kThreadsEnv).c_str())) {
    if (auto cap = parse_thread_cap(env)) omp_set_num_threads(*cap);
  }
  return omp_get_max_threads();
}

int max_threads() { return omp_get_max_threads(); }

}  // namespace iotyper
