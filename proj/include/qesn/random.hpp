#pragma once

#include <cstdint>
#include <random>

namespace qesn {

/// splitmix64 finalizer; used to derive independent substream seeds.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Counter-style seed derivation: hash(seed, a, b, c). Streams derived from
/// distinct tuples are independent of the order in which they are used.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                          std::uint64_t c = 0) noexcept;

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform();                        // (0,1)
    double uniform(double lo, double hi);
    double normal();
    double normal(double mean, double sd) { return mean + sd * normal(); }
    double gamma(double shape, double rate);
    /// Inverse-gamma with density proportional to x^{-shape-1} exp(-scale/x).
    double inv_gamma(double shape, double scale);
    bool bernoulli(double p) { return uniform() < p; }
    std::uint64_t index(std::uint64_t n);    // uniform on {0..n-1}

    /// N(mean, sd^2) truncated to [0, inf).
    double truncated_normal_positive(double mean, double sd);

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

/// Standard normal truncated to [a, inf).
double sample_std_normal_above(Rng& rng, double a);

}  // namespace qesn
