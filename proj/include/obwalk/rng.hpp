#pragma once

#include <cstdint>
#include <vector>

#include "obwalk/numerics.hpp"

namespace obwalk {

/**
 * Counter-based pseudo-random stream (SplitMix64 core).
 *
 * A stream is identified by a 64-bit key; draws are a pure function of
 * (key, draw counter), so any (seed, trial, ...) tuple maps to a reproducible,
 * scheduling-independent sequence.  Substreams are derived by hashing an index
 * into the parent key (see derive); parallel Monte Carlo gives each trial its
 * own substream and may run trials in any order.
 */
class Prng {
  public:
    explicit Prng(std::uint64_t seed) : state_(mix(seed ^ 0x1f123bb5159a55e5ull)) {}

    // Decorrelated child stream for substream index `idx` (trial, site, ...).
    Prng derive(std::uint64_t idx) const {
        Prng child(0);
        child.state_ = mix(state_ ^ mix(idx + 0x632be59bd9b4e019ull));
        return child;
    }

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ull;
        return mix(state_);
    }

    // Uniform on [0,1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform on (0,1]; safe as a log argument.
    double uniform_pos() { return 1.0 - uniform(); }

    // Standard normal via Box-Muller; always consumes exactly two uniforms.
    double gaussian();

    // Exponential with the given rate.
    double exponential(double rate);

    Complex complex_gaussian() { return {gaussian(), gaussian()}; }

    // Index in [0, p.size()) with probability p[i]; p must sum to ~1.
    int categorical(const std::vector<double>& p);

    // Haar-distributed d x d unitary (QR of a Gaussian matrix, R-phases fixed).
    CMatrix haar_unitary(Eigen::Index d);

  private:
    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xbf58476d1ce4e5b9ull;
        z ^= z >> 27;
        z *= 0x94d049bb133111ebull;
        z ^= z >> 31;
        return z;
    }

    std::uint64_t state_;
};

// Neumaier compensated accumulator; keeps parallel reductions associative in practice.
struct CompensatedSum {
    double sum = 0.0;
    double comp = 0.0;
    void add(double x) {
        double t = sum + x;
        if (std::abs(sum) >= std::abs(x))
            comp += (sum - t) + x;
        else
            comp += (x - t) + sum;
        sum = t;
    }
    double value() const { return sum + comp; }
};

}  // namespace obwalk
