#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <random>
#include <string_view>
#include <vector>

namespace rfsim {

// Deterministic random stream. mt19937_64 supplies the raw bits; the
// distribution transforms are spelled out here (instead of <random>'s
// std::normal_distribution etc.) so results are identical across standard
// library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform in [0, 1) with 53-bit resolution.
    double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    // Standard normal via Box-Muller; the paired value is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform01();  // (0, 1]
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    // Circularly-symmetric complex normal with E|z|^2 = 1.
    std::complex<double> complex_normal() {
        const double s = 0.70710678118654752440;  // 1/sqrt(2)
        const double re = normal();
        const double im = normal();
        return {s * re, s * im};
    }

    std::uint32_t bit() { return static_cast<std::uint32_t>(gen_() >> 63); }

    std::vector<std::uint8_t> bits(std::size_t n) {
        std::vector<std::uint8_t> out(n);
        for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<std::uint8_t>(bit());
        return out;
    }

    // Uniform integer in [0, n) without modulo bias.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - (std::numeric_limits<std::uint64_t>::max() % n);
        std::uint64_t x;
        do {
            x = gen_();
        } while (x >= limit);
        return x % n;
    }

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

namespace detail {
inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}
}  // namespace detail

// Derives an independent stream seed from a master seed and a purpose label,
// e.g. derive_seed(master, "chan/trs1/3/ap"). Stable across platforms, so the
// same label always addresses the same stream.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view label) {
    return detail::splitmix64(master ^ detail::fnv1a64(label));
}

}  // namespace rfsim
