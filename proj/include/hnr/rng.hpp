#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>

namespace hnr {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Sub-seed derivation: every independent random stream in the toolkit is
/// seeded with derive_seed(root, stream_id). Stream ids are fixed, documented
/// constants, so adding parallelism or reordering work cannot change results.
inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream_id) {
    return splitmix64(root ^ splitmix64(stream_id + 0x632be59bd9b4e019ULL));
}

/// Deterministic RNG. All draws are built from raw 64-bit engine output so
/// sequences do not depend on the standard library's distribution internals.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(splitmix64(seed)) {}

    std::uint64_t bits() { return eng_(); }

    /// Uniform in [0,1) with 53-bit resolution.
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n), n >= 1, via rejection.
    std::uint64_t integer(std::uint64_t n) {
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
        std::uint64_t v;
        do {
            v = eng_();
        } while (v >= limit);
        return v % n;
    }

    /// Box-Muller; consumes exactly two uniforms per call.
    double normal(double mean = 0.0, double sd = 1.0) {
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        return mean + sd * r * std::cos(6.283185307179586476925286766559 * u2);
    }

    /// Beta(2,3) as the 2nd order statistic of 4 uniforms.
    double beta23() {
        std::array<double, 4> u{uniform(), uniform(), uniform(), uniform()};
        std::sort(u.begin(), u.end());
        return u[1];
    }

private:
    std::mt19937_64 eng_;
};

}  // namespace hnr
