#pragma once
#include <bit>
#include <cmath>
#include <cstdint>

// Seeded randomness for the simulator.
//
// Everything here is counter-based or splitmix-derived so that any draw is a
// pure function of (stream key, index). Substreams for drops, samples, and
// fading realizations never depend on evaluation order or thread count, which
// keeps outputs byte-identical for a given seed.

namespace d2d::rng {

// splitmix64 finalizer. Bijective 64-bit mixer.
inline constexpr std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
}

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

// Key for a named substream of a parent stream.
inline constexpr std::uint64_t stream_key(std::uint64_t parent, std::uint64_t id) {
    return mix(parent + kGolden * (id + 1));
}

// idx-th draw of the stream identified by key (splitmix64 sequence).
inline constexpr std::uint64_t counter_draw(std::uint64_t key, std::uint64_t idx) {
    return mix(key + kGolden * idx);
}

// Uniform in (0, 1], 53-bit resolution. Never returns 0, so -log(u) is finite.
inline double to_unit_open(std::uint64_t bits) {
    return static_cast<double>((bits >> 11) + 1) * 0x1.0p-53;
}

// log2 for finite x > 0. Pure arithmetic (no libm), absolute error below
// 1e-13 bits, auto-vectorizes. Used in Monte-Carlo hot loops.
inline double fast_log2(double x) {
    const std::uint64_t bits = std::bit_cast<std::uint64_t>(x);
    int e = static_cast<int>((bits >> 52) & 0x7ff) - 1023;
    double m = std::bit_cast<double>((bits & 0x000fffffffffffffULL) | 0x3ff0000000000000ULL);
    if (m > 1.4142135623730951) {
        m *= 0.5;
        e += 1;
    }
    // log2(m) = 2/ln2 * atanh(z), z = (m-1)/(m+1), |z| <= 0.1716
    const double z = (m - 1.0) / (m + 1.0);
    const double z2 = z * z;
    const double p =
        1.0 +
        z2 * (1.0 / 3.0 +
              z2 * (1.0 / 5.0 +
                    z2 * (1.0 / 7.0 +
                          z2 * (1.0 / 9.0 +
                                z2 * (1.0 / 11.0 +
                                      z2 * (1.0 / 13.0 +
                                            z2 * (1.0 / 15.0 + z2 * (1.0 / 17.0))))))));
    return 2.8853900817779268 * z * p + static_cast<double>(e);  // 2/ln2
}

inline double fast_ln(double x) { return fast_log2(x) * 0.6931471805599453; }

// Unit-mean exponential (|h|^2 under Rayleigh amplitude fading).
inline double exp_from_bits(std::uint64_t bits) { return -fast_ln(to_unit_open(bits)); }

// float variants for the bulk Monte Carlo kernels; branchless so the
// surrounding loops vectorize. Error stays within ~1 ulp of float.
inline float to_unit_open_f(std::uint64_t bits) {
    return (static_cast<float>(bits >> 40) + 1.0f) * 0x1.0p-24f;
}

inline float fast_log2f(float x) {
    const std::uint32_t b = std::bit_cast<std::uint32_t>(x);
    int e = static_cast<int>(b >> 23) - 127;
    float m = std::bit_cast<float>((b & 0x007fffffu) | 0x3f800000u);  // [1,2)
    const bool hi = m >= 1.4142135624f;
    e += hi ? 1 : 0;
    m = hi ? 0.5f * m : m;  // [sqrt(1/2), sqrt(2))
    const float z = (m - 1.0f) / (m + 1.0f);
    const float z2 = z * z;
    const float p = 1.0f + z2 * (0.333333333f + z2 * (0.2f + z2 * 0.142857143f));
    return 2.885390082f * z * p + static_cast<float>(e);  // 2/ln2
}

inline float fast_lnf(float x) { return fast_log2f(x) * 0.6931471806f; }

// Small sequential generator for scenario generation, where draws are cheap
// and a stateful stream reads naturally. xoshiro256++ seeded via splitmix64.
class Stream {
public:
    explicit Stream(std::uint64_t key) {
        std::uint64_t st = key;
        for (auto& word : s_) {
            st += kGolden;
            word = mix(st);
        }
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    double uniform() { return to_unit_open(next()); }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // index in [0, n)
    std::uint64_t below(std::uint64_t n) { return next() % n; }

    bool coin() { return (next() >> 63) != 0; }

    double exponential() { return -fast_ln(uniform()); }

    // standard normal, Box-Muller (second value cached)
    double normal() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        const double r = std::sqrt(2.0 * exponential());
        const double a = 6.283185307179586 * uniform();
        cached_ = r * std::sin(a);
        have_cached_ = true;
        return r * std::cos(a);
    }

private:
    static constexpr std::uint64_t rotl(std::uint64_t v, int k) {
        return (v << k) | (v >> (64 - k));
    }
    std::uint64_t s_[4];
    double cached_ = 0.0;
    bool have_cached_ = false;
};

}  // namespace d2d::rng
