#pragma once

#include <cmath>
#include <cstdint>

namespace ldpfl {

// Deterministic 64-bit generator (splitmix64). Every stochastic draw in the
// simulator comes from a stream keyed by (global_seed, client, round, purpose)
// so results are independent of execution order.
class Rng {
   public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform in (0, 1]; safe as a log argument.
    double uniform_pos() {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller, one value per call (no cached spare).
    double normal() {
        const double u1 = uniform_pos();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(6.283185307179586476925286766559 * u2);
    }

    double normal(double mean, double stddev) {
        return mean + stddev * normal();
    }

    // Uniform integer in [0, n).
    std::uint64_t uniform_index(std::uint64_t n) { return next_u64() % n; }

    // Gamma(shape, 1) via Marsaglia-Tsang; shape > 0.
    double gamma(double shape) {
        if (shape < 1.0) {
            const double u = uniform_pos();
            return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x = normal();
            double v = 1.0 + c * x;
            if (v <= 0.0) continue;
            v = v * v * v;
            const double u = uniform_pos();
            if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) {
                return d * v;
            }
        }
    }

   private:
    std::uint64_t state_;
};

// Stream purposes; part of the seed derivation key.
enum class StreamPurpose : std::uint64_t {
    model_init = 1,
    partition = 2,
    synth = 3,
    local_train = 4,
    upload_perturb = 5,
    attack = 6,
    attack_perturb = 7,
    tmma_estimate = 8,
    subset = 9,
    test_split = 10,
};

inline std::uint64_t mix64(std::uint64_t x) {
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t global_seed,
                                 std::uint64_t client_id, std::uint64_t round,
                                 StreamPurpose purpose) {
    std::uint64_t h = mix64(global_seed + 0x9e3779b97f4a7c15ULL);
    h = mix64(h ^ (client_id + 0x9e3779b97f4a7c15ULL));
    h = mix64(h ^ (round + 0x9e3779b97f4a7c15ULL));
    h = mix64(h ^ static_cast<std::uint64_t>(purpose));
    return h;
}

}  // namespace ldpfl
