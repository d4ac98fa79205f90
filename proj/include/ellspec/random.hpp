#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string_view>

namespace ellspec {

/// splitmix64 finalizer; spreads seed material over 64 bits.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view s) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Seed of the substream identified by (master seed, purpose tag, index).
/// Pure function of its inputs, so replications can be dealt out to any
/// number of workers in any order without changing what each one draws.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view purpose,
                                    std::uint64_t index) noexcept {
    return mix64(mix64(mix64(master) ^ fnv1a64(purpose)) ^ index);
}

/// One independent random stream. Wraps a fixed-algorithm engine plus the
/// variate generators used across the library; the sequence of draws is
/// fully determined by the seed (std distributions are avoided because the
/// standard leaves their algorithms unspecified).
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : eng_(seed) {}

    RandomStream(std::uint64_t master, std::string_view purpose, std::uint64_t index)
        : eng_(derive_seed(master, purpose, index)) {}

    /// Uniform on (0,1), both endpoints excluded.
    double uniform() {
        return (static_cast<double>(eng_() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal (Box-Muller; the second variate of each pair is cached).
    double normal() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        const double r = std::sqrt(-2.0 * std::log(uniform()));
        const double theta = 2.0 * pi_ * uniform();
        cached_ = r * std::sin(theta);
        has_cached_ = true;
        return r * std::cos(theta);
    }

    /// Gamma(shape, scale), Marsaglia-Tsang squeeze for shape >= 1,
    /// boosted by U^{1/shape} below 1.
    double gamma(double shape, double scale) {
        if (!(shape > 0.0) || !(scale > 0.0))
            throw std::domain_error("RandomStream::gamma: shape and scale must be positive");
        if (shape < 1.0) {
            const double u = uniform();
            return gamma(shape + 1.0, scale) * std::pow(u, 1.0 / shape);
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
            if (u < 1.0 - 0.0331 * x * x * x * x) return scale * d * v;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return scale * d * v;
        }
    }

    double chi_square(double dof) { return gamma(0.5 * dof, 2.0); }

    double beta(double a, double b) {
        const double x = gamma(a, 1.0);
        const double y = gamma(b, 1.0);
        return x / (x + y);
    }

    /// Unbiased draw from {0, ..., n-1} by rejection.
    std::uint64_t uniform_index(std::uint64_t n) {
        if (n == 0) throw std::domain_error("RandomStream::uniform_index: n must be positive");
        const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
        const std::uint64_t overhang = (max % n + 1) % n;  // 2^64 mod n
        for (;;) {
            const std::uint64_t x = eng_();
            if (overhang == 0 || x <= max - overhang) return x % n;
        }
    }

private:
    static constexpr double pi_ = 3.141592653589793238462643383279502884;
    std::mt19937_64 eng_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

}  // namespace ellspec
