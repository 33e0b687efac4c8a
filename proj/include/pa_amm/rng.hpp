// Reproducible random streams.
//
// xoshiro256** (Blackman & Vigna) seeded through splitmix64, with Gaussian
// draws from the Marsaglia polar method. The polar transform needs only +, *,
// /, sqrt and a logarithm; the logarithm below is built from frexp and a
// rational series so the Gaussian stream is bit-identical on any IEEE-754
// platform compiled without FP contraction.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

namespace pa_amm {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

namespace detail {

// Natural log for x in (0, 1], accurate to a few ulp.
inline double portable_log(double x) {
    int exponent = 0;
    double m = std::frexp(x, &exponent);  // x = m 2^e, m in [0.5, 1)
    if (m < 0.70710678118654752440) {
        m *= 2.0;
        exponent -= 1;
    }
    // log m = 2 atanh(t), t = (m - 1) / (m + 1), |t| < 0.1716
    const double t = (m - 1.0) / (m + 1.0);
    const double t2 = t * t;
    double term = t;
    double sum = 0.0;
    for (int k = 1; k < 40; k += 2) {
        const double add = term / k;
        sum += add;
        if (std::abs(add) < 1e-18 * std::abs(sum)) break;
        term *= t2;
    }
    constexpr double ln2_hi = 6.93147180369123816490e-01;
    constexpr double ln2_lo = 1.90821492927058770002e-10;
    const double e = static_cast<double>(exponent);
    return e * ln2_hi + (2.0 * sum + e * ln2_lo);
}

}  // namespace detail

class Xoshiro256 {
public:
    using result_type = std::uint64_t;

    explicit Xoshiro256(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& w : s_) w = splitmix64(sm);
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::array<std::uint64_t, 4> s_{};
};

class GaussianStream {
public:
    explicit GaussianStream(std::uint64_t seed) : engine_(seed) {}

    double standard() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * engine_.uniform() - 1.0;
            v = 2.0 * engine_.uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double factor = std::sqrt(-2.0 * detail::portable_log(s) / s);
        spare_ = v * factor;
        has_spare_ = true;
        return u * factor;
    }

    double normal(double mean, double stddev) { return mean + stddev * standard(); }

private:
    Xoshiro256 engine_;
    double spare_{0.0};
    bool has_spare_{false};
};

}  // namespace pa_amm
