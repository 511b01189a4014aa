#pragma once

#include <cstdint>
#include <random>

namespace countewa {

using Rng = std::mt19937_64;

// Child seed for an independent stream. splitmix64 finalizer over
// (seed, stream) so that neighbouring base seeds do not share streams.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
  return Rng(derive_seed(seed, stream));
}

}  // namespace countewa
