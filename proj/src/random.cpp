#include "qesn/random.hpp"
#include "qesn/special.hpp"

#include <cmath>

namespace qesn {

std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                          std::uint64_t c) noexcept {
    std::uint64_t h = mix64(seed);
    h = mix64(h ^ mix64(a + 0x1234567ULL));
    h = mix64(h ^ mix64(b + 0x89abcdefULL));
    h = mix64(h ^ mix64(c + 0x13579bdfULL));
    return h;
}

double Rng::uniform() {
    // 53-bit mantissa, shifted off zero.
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal() {
    // Inverse-CDF keeps exactly one engine draw per variate, which makes
    // substreams easy to reason about.
    return normal_quantile(uniform());
}

double Rng::gamma(double shape, double rate) {
    // Marsaglia-Tsang; boosted for shape < 1.
    if (shape < 1.0) {
        const double u = uniform();
        return gamma(shape + 1.0, rate) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x, v;
        do {
            x = normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = uniform();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v / rate;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v / rate;
    }
}

double Rng::inv_gamma(double shape, double scale) { return 1.0 / gamma(shape, scale); }

std::uint64_t Rng::index(std::uint64_t n) {
    auto k = static_cast<std::uint64_t>(uniform() * static_cast<double>(n));
    return k < n ? k : n - 1;
}

double sample_std_normal_above(Rng& rng, double a) {
    if (a < 8.0) {
        // Inverse CDF on the upper tail: P(X > x) = Phi(-x).
        const double tail = normal_cdf(-a);
        const double x = -normal_quantile(rng.uniform() * tail);
        return x < a ? a : x;
    }
    // Robert (1995) exponential proposal for the far tail.
    const double lambda = 0.5 * (a + std::sqrt(a * a + 4.0));
    for (;;) {
        const double x = a - std::log(rng.uniform()) / lambda;
        const double diff = x - lambda;
        if (std::log(rng.uniform()) <= -0.5 * diff * diff) return x;
    }
}

double Rng::truncated_normal_positive(double mean, double sd) {
    return mean + sd * sample_std_normal_above(*this, -mean / sd);
}

}  // namespace qesn
