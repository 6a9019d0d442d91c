#pragma once

#include <cstdint>
#include <cmath>
#include <random>

#include "lporl/types.hpp"

namespace lporl {

/// SplitMix64 mixing step; used to derive well-separated seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Seedable generator with platform-independent draws.
///
/// All transforms (uniform doubles, categorical inversion) are implemented
/// on top of the raw mt19937_64 output stream, so two builds on different
/// standard libraries produce identical samples. Streams are split by id:
/// substream k of master seed s is seeded with splitmix64(s ^ splitmix64(k)),
/// one substream per dataset or per solver run.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(splitmix64(seed)) {}

    static Rng substream(std::uint64_t master_seed, std::uint64_t stream_id) {
        return Rng(master_seed ^ splitmix64(stream_id));
    }

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Exp(1) variate.
    double exponential() { return -std::log1p(-uniform()); }

    /// Index i with probability probs[i] / sum(probs); probs must be
    /// nonnegative with positive sum. CDF inversion by linear scan.
    int categorical(const Vector& probs) {
        const double total = probs.sum();
        double u = uniform() * total;
        for (int i = 0; i + 1 < probs.size(); ++i) {
            u -= probs[i];
            if (u < 0.0) return i;
        }
        return static_cast<int>(probs.size()) - 1;
    }

    /// Uniform integer in [0, n).
    int uniform_int(int n) {
        return static_cast<int>(uniform() * static_cast<double>(n)) % n;
    }

    /// Point on the d-simplex (normalized Exp(1) draws).
    Vector simplex(int d) {
        Vector v(d);
        for (int i = 0; i < d; ++i) v[i] = exponential();
        return v / v.sum();
    }

    /// Standard normal via Box-Muller on our own uniforms.
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    Vector normal_vector(int d) {
        Vector v(d);
        for (int i = 0; i < d; ++i) v[i] = normal();
        return v;
    }

  private:
    std::mt19937_64 gen_;
};

}  // namespace lporl
