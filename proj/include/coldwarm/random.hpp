#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace coldwarm {

using Rng = std::mt19937_64;

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Deterministic per-task seed, e.g. derive_seed(base, {item, n, repeat}).
/// Order of parts matters.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> parts) {
    std::uint64_t h = mix64(base);
    for (auto p : parts) h = mix64(h ^ mix64(p));
    return h;
}

/// Uniform sample of `k` distinct indices from [0, n) via partial Fisher-Yates.
/// Returned in draw order; callers sort when they need a canonical order.
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, Rng& rng);

} // namespace coldwarm
