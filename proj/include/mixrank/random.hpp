#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace mixrank {

using Rng = std::mt19937_64;

// SplitMix64 finalizer.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Independent stream seed for task `index` under `master`.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    return mix64(mix64(master) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

// Uniform double in (0, 1).
inline double open_unit(Rng& rng) {
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

// Uniform point on the probability simplex with k vertices.
inline std::vector<double> sample_simplex(Rng& rng, std::size_t k) {
    std::vector<double> x(k);
    double s = 0.0;
    for (auto& v : x) {
        v = -std::log(open_unit(rng));
        s += v;
    }
    for (auto& v : x) v /= s;
    return x;
}

// Uniform integer in [lo, hi].
inline std::int64_t uniform_int(Rng& rng, std::int64_t lo, std::int64_t hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    // Rejection keeps the draw unbiased and platform independent.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return lo + static_cast<std::int64_t>(x % span);
}

} // namespace mixrank
