// Self-contained seeded PRNG (xoshiro256++ seeded via splitmix64).
// Used instead of <random> distributions so that simulator output is
// reproducible bit-for-bit across platforms and standard libraries.
#pragma once

#include <cmath>
#include <cstdint>

namespace tunradar {

class Rng {
public:
    explicit Rng(uint64_t seed = 0x9E3779B97F4A7C15ull) {
        // splitmix64 expansion of the seed into the xoshiro state
        uint64_t x = seed;
        for (auto& s : state_) {
            x += 0x9E3779B97F4A7C15ull;
            uint64_t z = x;
            z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
            z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
            s = z ^ (z >> 31);
        }
    }

    uint64_t next_u64() {
        const uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in [0, 1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    int uniform_int(int lo, int hi_inclusive) {
        return lo + static_cast<int>(next_u64() % static_cast<uint64_t>(hi_inclusive - lo + 1));
    }

    bool bernoulli(double p) { return uniform() < p; }

    // Standard normal via Box-Muller; one spare value cached.
    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    double gaussian(double mean, double sigma) { return mean + sigma * gaussian(); }

    // Derive an independent, reproducible stream (e.g. one per frame).
    static uint64_t mix(uint64_t seed, uint64_t stream) {
        uint64_t z = seed ^ (0x9E3779B97F4A7C15ull + (stream << 1));
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

private:
    static uint64_t rotl(uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }

    uint64_t state_[4] = {};
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace tunradar
