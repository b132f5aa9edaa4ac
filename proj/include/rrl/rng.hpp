#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace rrl {

// splitmix64 finalizer, used to derive sub-stream seeds so parallel units
// (train / eval / per-episode) never share a raw generator stream.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(seed ^ splitmix64(stream + 1));
}

// Named sub-streams hanging off one run seed.
enum SeedStream : std::uint64_t {
    kStreamTrain = 0x7261696E,      // "rain"
    kStreamEval = 0x6576616C,       // "eval"
    kStreamEnv = 0x656E76,          // "env"
};

// Every stochastic draw in the project flows through this wrapper.
// The raw 64-bit stream is std::mt19937_64 (output sequence pinned by the
// standard); the distribution transforms below are hand-rolled instead of
// using std:: distributions, whose outputs vary across standard libraries.
// Same seed => same draw sequence on any conforming platform.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform_real(double lo, double hi) {
        return lo + (hi - lo) * uniform01();
    }

    // Uniform over {0, ..., n-1}, unbiased via rejection.
    int uniform_int(int n) {
        const std::uint64_t bound = static_cast<std::uint64_t>(n);
        const std::uint64_t threshold = (-bound) % bound;
        for (;;) {
            const std::uint64_t r = next_u64();
            if (r >= threshold) return static_cast<int>(r % bound);
        }
    }

    bool bernoulli(double p) { return uniform01() < p; }

    // Box-Muller, two fresh uniforms per draw (no cached spare, so the
    // draw count per call is fixed). u1 lies in (0, 1].
    double normal(double mean, double stddev) {
        const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
        const double u2 = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
        const double radius = std::sqrt(-2.0 * std::log(u1));
        constexpr double two_pi = 6.283185307179586476925286766559;
        return mean + stddev * radius * std::cos(two_pi * u2);
    }

  private:
    std::mt19937_64 gen_;
};

}  // namespace rrl
