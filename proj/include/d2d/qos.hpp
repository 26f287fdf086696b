#pragma once
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <new>
#include <string>
#include <vector>

#include "d2d/errors.hpp"
#include "d2d/rng.hpp"
#include "d2d/units.hpp"

// Translation of a V-UE's latency/reliability demand (N bits within L_tol
// time units, outage at most p_o) into a per-time-unit RB count and a
// slow-SINR floor. The floor is found by bisection over a Monte-Carlo outage
// estimate that reuses one fixed sample set (common random numbers), which
// makes the estimate monotone in the tested SINR and the search well-defined.

namespace d2d {

struct VueQos {
    int payload_bits = 12800;      // message size N
    double max_outage = 1e-5;      // p_o
    int latency_units = 10;        // L_tol, scheduling time units
    int symbols_per_rb = 84;       // complex symbols per RB
    int rbs_per_message = 20;      // RBs that may carry one message
    int rbs_per_unit = 2;          // RBs per time unit
    double sinr_threshold = 0.0;   // linear slow-SINR floor (0 = not derived yet)

    void validate() const {
        auto fail = [](const std::string& m) { throw ConfigError("qos: " + m); };
        if (payload_bits < 1) fail("payload_bits must be a positive integer");
        if (!(max_outage > 0.0 && max_outage < 1.0)) fail("max_outage must lie in (0, 1)");
        if (latency_units < 1) fail("latency_units must be a positive integer");
        if (symbols_per_rb < 1) fail("symbols_per_rb must be a positive integer");
        if (rbs_per_message < 1) fail("rbs_per_message must be a positive integer");
        if (sinr_threshold < 0.0) fail("sinr_threshold must be >= 0");
    }
};

// ceil(rbs_per_message / latency_units): RBs needed every time unit so the
// whole message fits inside the latency window.
inline int rbs_per_time_unit(int rbs_per_message, int latency_units) {
    if (rbs_per_message < 1 || latency_units < 1)
        throw ConfigError("rbs_per_time_unit: arguments must be positive integers");
    return (rbs_per_message + latency_units - 1) / latency_units;
}

struct McConfig {
    std::int64_t num_samples = 10'000'000;
    std::uint64_t seed = 1;
    double bracket_lo_db = 0.0;
    double bracket_hi_db = 60.0;
    double tol_db = 0.05;
};

namespace detail {

inline constexpr int kMcChunk = 8192;
// Above this the sample cache is not materialized and every bisection iterate
// regenerates its samples from the counters.
inline constexpr std::size_t kMcCacheBytes = std::size_t(5) << 29;  // 2.5 GiB

// X = |h|^2 / (1 + |g|^2) for samples [base, base+n), slot-major:
// dst[i * stride + j] holds slot i of sample base+j. Pure function of
// (root, sample index, slot), so chunk boundaries never change values.
inline void fill_ratio_chunk(std::uint64_t root, std::int64_t base, int n, int slots,
                             float* dst, std::size_t stride) {
    std::uint64_t keys[kMcChunk];
    for (int j = 0; j < n; ++j)
        keys[j] = rng::stream_key(root, static_cast<std::uint64_t>(base + j));
    for (int i = 0; i < slots; ++i) {
        float* row = dst + static_cast<std::size_t>(i) * stride;
        const std::uint64_t ih = 2ull * static_cast<std::uint64_t>(i);
        const std::uint64_t ig = ih + 1;
        for (int j = 0; j < n; ++j) {
            const float h2 = -rng::fast_lnf(rng::to_unit_open_f(rng::counter_draw(keys[j], ih)));
            const float g2 = -rng::fast_lnf(rng::to_unit_open_f(rng::counter_draw(keys[j], ig)));
            row[j] = h2 / (1.0f + g2);
        }
    }
}

// Samples among [0, n) whose accumulated restricted-capacity bits per symbol
// fall short of `need`. Slot loop outside, sample loop inside, so the inner
// loop is straight-line float math.
inline std::int64_t count_outage_chunk(const float* x, std::size_t stride, int n, int slots,
                                       float gamma, float need) {
    float acc[kMcChunk];
    for (int j = 0; j < n; ++j) acc[j] = 0.0f;
    for (int i = 0; i < slots; ++i) {
        const float* row = x + static_cast<std::size_t>(i) * stride;
        for (int j = 0; j < n; ++j)
            acc[j] += rng::fast_log2f(1.0f + gamma * row[j]);
    }
    std::int64_t bad = 0;
    for (int j = 0; j < n; ++j)
        if (acc[j] < need) ++bad;
    return bad;
}

// Fixed sample set with an outage estimator over it. With build_cache the
// ratios are materialized once (float32) and every gamma re-scans them;
// otherwise each evaluation regenerates chunks on the fly. Both paths walk
// identical chunks of identical values, so they agree bit for bit.
class OutageEvaluator {
public:
    OutageEvaluator(const VueQos& qos, const McConfig& mc, bool build_cache)
        : slots_(qos.rbs_per_message),
          num_samples_(mc.num_samples),
          need_(static_cast<float>(static_cast<double>(qos.payload_bits) /
                                   static_cast<double>(qos.symbols_per_rb))),
          root_(rng::stream_key(mc.seed, 0x0A7A)) {
        qos.validate();
        if (num_samples_ < 1) throw ConfigError("outage estimate: num_samples must be >= 1");
        if (static_cast<double>(num_samples_) < 1.0 / qos.max_outage)
            throw SampleSizeError(
                "outage estimate: num_samples below 1/max_outage; the estimate cannot "
                "resolve the target");
        const std::size_t bytes = static_cast<std::size_t>(slots_) *
                                  static_cast<std::size_t>(num_samples_) * sizeof(float);
        if (build_cache && bytes <= detail::kMcCacheBytes) {
            try {
                cache_.resize(bytes / sizeof(float));
                const std::size_t stride = static_cast<std::size_t>(num_samples_);
                for (std::int64_t base = 0; base < num_samples_; base += kMcChunk) {
                    const int n =
                        static_cast<int>(std::min<std::int64_t>(kMcChunk, num_samples_ - base));
                    fill_ratio_chunk(root_, base, n, slots_, cache_.data() + base, stride);
                }
                cached_ = true;
            } catch (const std::bad_alloc&) {
                cache_.clear();
                cache_.shrink_to_fit();
                cached_ = false;
            }
        }
        if (!cached_)
            scratch_.resize(static_cast<std::size_t>(slots_) * kMcChunk);
    }

    double operator()(double gamma_lin) const {
        if (!(gamma_lin > 0.0)) throw ConfigError("outage estimate: gamma must be > 0");
        const float gamma = static_cast<float>(gamma_lin);
        std::int64_t bad = 0;
        for (std::int64_t base = 0; base < num_samples_; base += kMcChunk) {
            const int n = static_cast<int>(std::min<std::int64_t>(kMcChunk, num_samples_ - base));
            if (cached_) {
                bad += count_outage_chunk(cache_.data() + base,
                                          static_cast<std::size_t>(num_samples_), n, slots_,
                                          gamma, need_);
            } else {
                fill_ratio_chunk(root_, base, n, slots_, scratch_.data(), kMcChunk);
                bad += count_outage_chunk(scratch_.data(), kMcChunk, n, slots_, gamma, need_);
            }
        }
        return static_cast<double>(bad) / static_cast<double>(num_samples_);
    }

private:
    int slots_;
    std::int64_t num_samples_;
    float need_;
    std::uint64_t root_;
    bool cached_ = false;
    std::vector<float> cache_;
    mutable std::vector<float> scratch_;
};

}  // namespace detail

// P{ sum_i rho*log2(1 + gamma * |h_i|^2 / (1 + |g_i|^2)) < N } over
// rbs_per_message iid Rayleigh slots, estimated with mc.num_samples draws.
// Each sample owns a counter-based substream of (mc.seed, sample index), so
// the estimate is reproducible and, for a fixed seed, monotone non-increasing
// in gamma.
inline double outage_probability(double gamma_lin, const VueQos& qos, const McConfig& mc) {
    return detail::OutageEvaluator(qos, mc, /*build_cache=*/false)(gamma_lin);
}

struct ThresholdResult {
    double threshold_db = 0.0;
    double threshold_lin = 0.0;
    double achieved_outage = 0.0;  // outage at the returned threshold
    double ci95 = 0.0;             // binomial 95% half-width of achieved_outage
    int bisection_steps = 0;
};

// Smallest slow-SINR floor (within tol_db) whose restricted outage stays at or
// below qos.max_outage. Throws BracketError when the bracket endpoints do not
// straddle the target.
inline ThresholdResult derive_sinr_threshold(const VueQos& qos, const McConfig& mc) {
    double lo = mc.bracket_lo_db;
    double hi = mc.bracket_hi_db;
    if (!(hi > lo)) throw ConfigError("derive_sinr_threshold: bracket_hi_db must exceed lo");
    if (!(mc.tol_db > 0.0)) throw ConfigError("derive_sinr_threshold: tol_db must be > 0");

    const detail::OutageEvaluator outage(qos, mc, /*build_cache=*/true);
    const double p_lo = outage(db_to_linear(lo));
    const double p_hi = outage(db_to_linear(hi));
    if (!(p_lo > qos.max_outage) || !(p_hi <= qos.max_outage))
        throw BracketError("derive_sinr_threshold: bracket does not straddle the outage "
                           "target (outage at lo = " + std::to_string(p_lo) +
                           ", at hi = " + std::to_string(p_hi) + ")",
                           p_lo, p_hi);

    double p_at_hi = p_hi;
    int steps = 0;
    while (hi - lo > mc.tol_db) {
        const double mid = 0.5 * (lo + hi);
        const double p = outage(db_to_linear(mid));
        ++steps;
        if (p <= qos.max_outage) {
            hi = mid;
            p_at_hi = p;
        } else {
            lo = mid;
        }
    }

    ThresholdResult res;
    res.threshold_db = hi;
    res.threshold_lin = db_to_linear(hi);
    res.achieved_outage = p_at_hi;
    res.ci95 = 1.96 * std::sqrt(p_at_hi * (1.0 - p_at_hi) /
                                static_cast<double>(mc.num_samples));
    res.bisection_steps = steps;
    return res;
}

}  // namespace d2d
