#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace mgmw {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t value);

/// Seed for an independent named stream: mix64(seed ^ fnv1a(name)).
std::uint64_t derive_seed(std::uint64_t seed, std::string_view name);

/// Seed for the index-th member of a batch: mix64(seed + mix64(index + 1)).
/// Depends only on (seed, index), so batch scheduling cannot change it.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace mgmw
