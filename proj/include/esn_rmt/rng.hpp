#pragma once

// Labelled random substreams. One user seed fans out into disjoint streams
// for training inputs, label noise, test data and reservoir weights, and
// each of those is further indexed (per trial, per grid point).

#include <cstdint>
#include <random>

namespace esn_rmt {

enum class Stream : std::uint64_t {
    TrainInputs = 0x7472'6169'6e5f'7531ULL,
    TrainNoise = 0x7472'6169'6e5f'6e31ULL,
    TestInputs = 0x7465'7374'5f75'3031ULL,
    TestNoise = 0x7465'7374'5f6e'3031ULL,
    Reservoir = 0x7265'7365'7276'3031ULL,
    Trial = 0x7472'6961'6c5f'3031ULL,
};

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed for substream (stream, index) of a user seed.
inline constexpr std::uint64_t derive_seed(std::uint64_t seed, Stream stream, std::uint64_t index = 0) {
    return splitmix64(splitmix64(seed ^ static_cast<std::uint64_t>(stream)) + splitmix64(index + 1));
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed, Stream stream, std::uint64_t index = 0) {
    std::seed_seq seq{derive_seed(seed, stream, index), static_cast<std::uint64_t>(stream), index};
    return Rng(seq);
}

}  // namespace esn_rmt
