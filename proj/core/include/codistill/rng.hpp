#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>
#include <vector>

namespace codistill {

// Deterministic, platform-independent RNG built on splitmix64.
//
// std:: engines would do, but libstdc++ and libc++ disagree on the algorithms
// behind normal_distribution and shuffle, and the whole harness promises
// bit-identical runs for a given seed. Keeping the generator and the sampling
// transforms in one small class pins every drawn bit.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Box-Muller. Draws two uniforms per sample and discards the spare so the
    // stream position never depends on call history.
    double normal(double mean = 0.0, double stddev = 1.0) {
        double u1 = 1.0 - uniform01();  // (0, 1]
        double u2 = uniform01();
        double r = std::sqrt(-2.0 * std::log(u1));
        return mean + stddev * r * std::cos(2.0 * std::numbers::pi * u2);
    }

    // [0, n). n == 0 returns 0.
    std::size_t uniform_index(std::size_t n) {
        if (n == 0) return 0;
        return static_cast<std::size_t>(next_u64() % n);
    }

    bool bernoulli(double p) { return uniform01() < p; }

    // Fisher-Yates; unlike std::shuffle the draw sequence is pinned.
    template <class T>
    void shuffle(std::vector<T>& v) {
        if (v.size() < 2) return;
        for (std::size_t i = v.size() - 1; i > 0; --i) {
            std::size_t j = uniform_index(i + 1);
            std::swap(v[i], v[j]);
        }
    }

private:
    std::uint64_t state_;
};

// Stable sub-stream derivation: mixes a tag into a base seed so independent
// consumers (shuffling, augmentation, per-model init) never share a stream.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view tag) {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a 64
    for (unsigned char c : tag) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    Rng mixer(base ^ h);
    return mixer.next_u64();
}

}  // namespace codistill
