#pragma once

#include <cstdint>
#include <random>

namespace turnpike {

using Engine = std::mt19937_64;

// Stream tags keep path, shard and bank draws from overlapping for the same seed.
enum class StreamKind : std::uint32_t { path = 1, stationary_shard = 2, crosscheck = 3 };

// Independent engine for (seed, kind, index); the same triple always yields the same draws.
inline Engine make_stream(std::uint64_t seed, StreamKind kind, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(kind), static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  return Engine(seq);
}

}  // namespace turnpike
