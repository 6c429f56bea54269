#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace compdiff {

/// Engine used for every random stream in the library.
using Engine = std::mt19937_64;

/// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Derives a child seed from a parent seed and a path of stream labels.
/// Distinct paths give statistically unrelated seeds, so any component
/// (run, node, iteration) can open its own stream without shared state.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path) noexcept {
    std::uint64_t h = mix64(base);
    for (auto label : path) {
        h = mix64(h ^ mix64(label + 0x632be59bd9b4e019ULL));
    }
    return h;
}

// Stream labels. Kept stable: changing one changes every golden trace.
namespace stream {
inline constexpr std::uint64_t run = 0x72756e;
inline constexpr std::uint64_t observation = 0x6f6273;
inline constexpr std::uint64_t projection = 0x70726f6a;
inline constexpr std::uint64_t target = 0x776f;
inline constexpr std::uint64_t noise_profile = 0x62657461;
inline constexpr std::uint64_t iteration = 0x74;
}  // namespace stream

inline Engine make_engine(std::uint64_t seed) { return Engine{seed}; }

}  // namespace compdiff
