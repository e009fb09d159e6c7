#pragma once

// Binary symmetric Markov sources: transition probabilities, mixing and sampling.

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

namespace pulltrack {

/// A source state or sample value, always 0 or 1.
using Bit = int;

/// Random stream used by every stochastic component.
using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to derive well-separated seeds.
inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Independent stream number `stream` of the experiment seeded with `seed`.
inline Rng make_stream(std::uint64_t seed, std::uint64_t stream) {
    return Rng{splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL))};
}

/// Uniform double in [0,1) from the top 53 bits of one draw. Bit-reproducible
/// across standard libraries, unlike std::uniform_real_distribution.
inline double uniform01(Rng& rng) noexcept {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline bool bernoulli(Rng& rng, double prob) noexcept { return uniform01(rng) < prob; }

inline void require_bit(Bit b, const char* what) {
    if (b != 0 && b != 1) throw std::invalid_argument(std::string(what) + " must be 0 or 1");
}

inline void require_probability(double p, const char* what) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument(std::string(what) + " must lie in [0,1]");
}

/// Two-state chain that keeps its state with probability `p` and flips otherwise.
struct SourceModel {
    double p = 0.5;
    int id = 1;

    void validate() const { require_probability(p, "self-transition probability"); }

    /// Second eigenvalue of the transition matrix, 2p-1.
    [[nodiscard]] double mixing_factor() const noexcept { return 2.0 * p - 1.0; }
};

[[nodiscard]] inline double one_step_prob(const SourceModel& m, Bit from, Bit to) {
    require_bit(from, "from");
    require_bit(to, "to");
    return from == to ? m.p : 1.0 - m.p;
}

/// Pr{X(t+n) = to | X(t) = from}.
[[nodiscard]] inline double n_step_prob(const SourceModel& m, Bit from, Bit to, int n) {
    require_bit(from, "from");
    require_bit(to, "to");
    if (n < 1) throw std::invalid_argument("step count must be at least 1");
    const double lambda_n = std::pow(m.mixing_factor(), n);
    return from == to ? 0.5 * (1.0 + lambda_n) : 0.5 * (1.0 - lambda_n);
}

[[nodiscard]] inline Bit sample_next(const SourceModel& m, Bit current, Rng& rng) {
    require_bit(current, "current");
    // Draw unconditionally so the stream advances identically for every p.
    const bool stay = uniform01(rng) < m.p;
    return stay ? current : 1 - current;
}

}  // namespace pulltrack
