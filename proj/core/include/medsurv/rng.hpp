#pragma once

#include <cstdint>
#include <random>

namespace medsurv {

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}
} // namespace detail

/// Mixes a seed with stream keys so that independently keyed substreams can be
/// consumed in any order (or in parallel) with identical results. Each distinct
/// key tuple yields a distinct, well-scrambled generator seed.
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t k0, std::uint64_t k1 = 0,
                                    std::uint64_t k2 = 0) {
    std::uint64_t h = detail::splitmix64(seed);
    h = detail::splitmix64(h ^ detail::splitmix64(k0 + 0x165667b19e3779f9ULL));
    h = detail::splitmix64(h ^ detail::splitmix64(k1 + 0x27d4eb2f165667c5ULL));
    h = detail::splitmix64(h ^ detail::splitmix64(k2 + 0x9e3779b97f4a7c15ULL));
    return h;
}

inline std::mt19937_64 make_rng(std::uint64_t seed) { return std::mt19937_64(seed); }

inline std::mt19937_64 substream(std::uint64_t seed, std::uint64_t k0, std::uint64_t k1 = 0,
                                 std::uint64_t k2 = 0) {
    return std::mt19937_64(substream_seed(seed, k0, k1, k2));
}

// Distribution draws. Fresh distribution objects per call: some standard
// distributions cache internal state, which would couple unrelated draws.

inline double draw_uniform(std::mt19937_64 &rng) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline double draw_normal(std::mt19937_64 &rng, double mean = 0.0, double sd = 1.0) {
    return std::normal_distribution<double>(mean, sd)(rng);
}

/// Gamma(shape, rate); mean = shape / rate.
inline double draw_gamma(std::mt19937_64 &rng, double shape, double rate) {
    return std::gamma_distribution<double>(shape, 1.0 / rate)(rng);
}

/// Inverse-gamma(shape, scale); mean = scale / (shape - 1) for shape > 1.
inline double draw_inverse_gamma(std::mt19937_64 &rng, double shape, double scale) {
    return scale / std::gamma_distribution<double>(shape, 1.0)(rng);
}

inline double draw_beta(std::mt19937_64 &rng, double a, double b) {
    double x = std::gamma_distribution<double>(a, 1.0)(rng);
    double y = std::gamma_distribution<double>(b, 1.0)(rng);
    return x / (x + y);
}

inline int draw_bernoulli(std::mt19937_64 &rng, double p) {
    return draw_uniform(rng) < p ? 1 : 0;
}

} // namespace medsurv
