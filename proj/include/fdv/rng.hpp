// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace fdv {

using Rng = std::mt19937_64;

// Stable 64-bit FNV-1a; std::hash is not stable across implementations.
std::uint64_t fnv1a(std::string_view text);

// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

// Seed of the independent random stream owned by one writer. Derived only
// from the master seed and the writer id, so scheduling order never matters.
std::uint64_t stream_seed(std::uint64_t master, std::string_view writer_id);

}  // namespace fdv
