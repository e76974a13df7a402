#pragma once

#include <cstdint>

namespace pargrid::kernels {

/// 64-bit finalizer-style mixing step (splitmix64). Advances the state and
/// returns a well-scrambled word; the basis for every deterministic
/// pseudo-random stream in the kernels.
inline std::uint64_t mix64_next(std::uint64_t& state)
{
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Maps a 64-bit word to a double in [0, 1).
inline double u64_to_unit(std::uint64_t u)
{
    return static_cast<double>(u >> 11) * 0x1.0p-53;
}

/// One scrambled word from a (seed, index) pair; independent draws for
/// independent indices.
inline std::uint64_t mix64_at(std::uint64_t seed, std::uint64_t index)
{
    std::uint64_t state = seed ^ (0xD1B54A32D192ED03ULL * (index + 1));
    return mix64_next(state);
}

} // namespace pargrid::kernels
