#pragma once

#include <cstdint>
#include <random>

namespace mlbn {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; a bijective 64-bit mixer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Stable seed for a named substream. Changing any component gives an
/// unrelated stream; the same components always give the same stream.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0,
                          std::uint64_t c = 0) noexcept;

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

/// Uniform draw on the open interval (0, 1); endpoints are redrawn.
double open_uniform(Rng& rng);

}  // namespace mlbn
