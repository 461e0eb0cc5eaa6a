// Copyright 2026 The iotyper Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef IOTYPER_PARALLEL_HPP
#define IOTYPER_PARALLEL_HPP

#include <optional>
#include <string_view>

namespace iotyper {

inline constexpr std::string_view kThreadsEnv = "IOTYPER_THREADS";

/// Parses a thread cap; nullopt unless the text is a positive integer.
std::optional<int> parse_thread_cap(std::string_view text);

/// Caps the OpenMP worker pool at $IOTYPER_THREADS when it is set to a
/// positive integer. Returns the number of threads now in effect.
int configure_threads_from_env();

int max_threads();

}  // namespace iotyper

#endif  // IOTYPER_PARALLEL_HPP
