#pragma once

#include <cmath>
#include <cstdint>

namespace lmoopt::rng {

// splitmix64 finalizer: the mixing core of every deterministic draw in the
// library. Noise, sample streams, and brute-force samplers are all pure
// functions of the integers fed in here, so traces are bit-reproducible.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Counter-based hash of up to four keys (seed, sample id, coordinate, tag).
inline std::uint64_t counter_hash(std::uint64_t a, std::uint64_t b = 0,
                                  std::uint64_t c = 0, std::uint64_t d = 0) {
    std::uint64_t h = mix64(a);
    h = mix64(h ^ (b + 0x9e3779b97f4a7c15ULL));
    h = mix64(h ^ (c + 0xd1b54a32d192ed03ULL));
    h = mix64(h ^ (d + 0x8cb92ba72f3d8dd7ULL));
    return h;
}

// Uniform double in (0, 1]; never exactly 0 so it is safe under log().
inline double to_unit(std::uint64_t h) {
    return (static_cast<double>(h >> 11) + 1.0) * 0x1.0p-53;
}

inline double uniform(std::uint64_t a, std::uint64_t b = 0,
                      std::uint64_t c = 0, std::uint64_t d = 0) {
    return to_unit(counter_hash(a, b, c, d));
}

// Standard normal via Box-Muller on two counter draws.
inline double normal(std::uint64_t a, std::uint64_t b = 0,
                     std::uint64_t c = 0, std::uint64_t d = 0) {
    const double u1 = to_unit(counter_hash(a, b, c, d));
    const double u2 = to_unit(counter_hash(a, b, c, d ^ 0x5bf0363546e38f2cULL));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
}

// Deterministic stream of sample identifiers (the xi_t sequence). Distinct
// seeds give statistically disjoint streams.
class SampleStream {
public:
    explicit SampleStream(std::uint64_t seed) : state_(mix64(seed ^ 0xa0761d6478bd642fULL)) {}

    std::uint64_t next() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix64(state_);
    }

private:
    std::uint64_t state_;
};

} // namespace lmoopt::rng
