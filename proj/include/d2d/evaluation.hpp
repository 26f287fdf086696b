#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "d2d/qos.hpp"
#include "d2d/schemes.hpp"

namespace d2d {

// Per-drop metrics: the slow-fading sum rate, per-realization fast-fading
// sum-rate samples, and per-V-UE transmitted bits per latency window.
struct DropResult {
    std::string scheme;
    int drop_index = 0;
    double sumrate_slow = 0.0;
    std::vector<double> sumrate_ssf_samples;
    std::vector<std::vector<double>> vue_bits_samples;  // [k'][realization]
    std::vector<char> vue_feasible;                     // [k']
};

// C-UE sum rate under slow fading only, normalized per RB
inline double mean_rb_rate(const Assignment& a, const PowerAllocation& pa,
                           const LinkGains& gains, const SubUserMap& sub) {
    return detail::slow_sum_rate(a, sub, gains, pa.cue_power, pa.vue_power) /
           static_cast<double>(sub.size());
}

namespace detail {

inline constexpr std::uint64_t kFadingTag = 0x55F0;

// four independent unit-mean exponential gains per (realization, time unit,
// RB): 0 C-UE uplink, 1 V-UE interference at eNB, 2 V-UE pair link,
// 3 C-UE interference at the V-UE receiver
inline double fading_gain(std::uint64_t root, std::uint64_t slot, int component) {
    return rng::exp_from_bits(
        rng::counter_draw(root, slot * 4 + static_cast<std::uint64_t>(component)));
}

}  // namespace detail

// Overlays i.i.d. Rayleigh fading (unit-mean exponential power gains) per RB
// and time unit on top of fixed powers. The channel grid is keyed by seed and
// physical RB only, so schemes compared under the same seed see the same
// fading.
inline DropResult simulate_ssf(const Assignment& a, const PowerAllocation& pa,
                               const LinkGains& gains, const SubUserMap& sub,
                               const VueQos& qos, int num_fading, std::uint64_t seed) {
    qos.validate();
    const int f = sub.size();
    if (static_cast<int>(a.pair.size()) != f || static_cast<int>(pa.cue_power.size()) != f)
        throw InputError("simulate_ssf: assignment or power size does not match sub-user map");
    const double sigma2 = gains.noise_mw;
    const int num_vues = sub.num_vues;
    const int latency = qos.latency_units;

    DropResult out;
    out.sumrate_slow = mean_rb_rate(a, pa, gains, sub);
    out.vue_feasible.assign(num_vues, 1);
    for (int kv : pa.infeasible_vues) out.vue_feasible[kv] = 0;
    out.vue_bits_samples.assign(num_vues, {});
    if (num_fading <= 0) return out;

    const std::uint64_t root = rng::stream_key(seed, detail::kFadingTag);
    out.sumrate_ssf_samples.reserve(num_fading);
    for (auto& v : out.vue_bits_samples) v.reserve(num_fading);

    for (int r = 0; r < num_fading; ++r) {
        const std::uint64_t window = static_cast<std::uint64_t>(r) * latency;
        // instantaneous C-UE sum rate at the window's first time unit
        double tot = 0.0;
        for (int m = 0; m < f; ++m) {
            const int k = a.pair[m];
            const std::uint64_t slot =
                window * f + static_cast<std::uint64_t>(a.rb_of_pair[m]);
            const double h2 = detail::fading_gain(root, slot, 0);
            double inter = 0.0;
            if (!sub.is_dummy(k))
                inter = pa.vue_power[k] * gains.vue_to_enb[sub.khat[k]] *
                        detail::fading_gain(root, slot, 1);
            const double hp = gains.cue_to_enb[sub.mhat[m]];
            tot += rng::fast_log2(1.0 + pa.cue_power[m] * hp * h2 / (sigma2 + inter));
        }
        out.sumrate_ssf_samples.push_back(tot / f);

        // per V-UE: bits transmitted across its RB-slots of the latency window
        std::vector<double> bits(num_vues, 0.0);
        for (int t = 0; t < latency; ++t) {
            for (int m = 0; m < f; ++m) {
                const int k = a.pair[m];
                if (sub.is_dummy(k)) continue;
                const int kv = sub.khat[k];
                const std::uint64_t slot =
                    (window + static_cast<std::uint64_t>(t)) * f +
                    static_cast<std::uint64_t>(a.rb_of_pair[m]);
                const double h2 = detail::fading_gain(root, slot, 2);
                const double g2 = detail::fading_gain(root, slot, 3);
                const double inter =
                    pa.cue_power[m] * gains.cue_to_vue[sub.mhat[m]][kv] * g2;
                const double sinr =
                    pa.vue_power[k] * gains.vue_pair[kv] * h2 / (sigma2 + inter);
                bits[kv] += qos.symbols_per_rb * rng::fast_log2(1.0 + sinr);
            }
        }
        for (int kv = 0; kv < num_vues; ++kv)
            out.vue_bits_samples[kv].push_back(bits[kv]);
    }
    return out;
}

// Cross-drop aggregation for one scheme: mean rates, pooled sorted samples
// for CDFs, outage and feasibility counts.
struct SchemeSummary {
    std::string scheme;
    int num_drops = 0;
    double mean_sumrate_slow = 0.0;
    double vue_outage = 0.0;       // Pr{bits < payload} pooled over real V-UEs
    double feasibility_rate = 1.0; // fraction of (drop, V-UE) accepted
    std::vector<double> sumrate_samples;           // sorted; fast-fading if present
    std::vector<std::vector<double>> vue_bits;     // [k'] sorted pooled samples
};

inline SchemeSummary aggregate(const std::string& scheme,
                               const std::vector<DropResult>& drops, const VueQos& qos) {
    if (drops.empty()) throw InputError("aggregate: no drop results");
    SchemeSummary s;
    s.scheme = scheme;
    s.num_drops = static_cast<int>(drops.size());
    std::size_t num_vues = 0;
    for (const auto& d : drops) num_vues = std::max(num_vues, d.vue_bits_samples.size());
    s.vue_bits.resize(num_vues);

    double slow_sum = 0.0;
    long long feasible = 0, vue_slots = 0, outage = 0, windows = 0;
    bool any_ssf = false;
    for (const auto& d : drops) {
        slow_sum += d.sumrate_slow;
        if (!d.sumrate_ssf_samples.empty()) any_ssf = true;
        for (char flag : d.vue_feasible) {
            feasible += flag ? 1 : 0;
            ++vue_slots;
        }
        for (std::size_t kv = 0; kv < d.vue_bits_samples.size(); ++kv) {
            for (double b : d.vue_bits_samples[kv]) {
                s.vue_bits[kv].push_back(b);
                ++windows;
                if (b < static_cast<double>(qos.payload_bits)) ++outage;
            }
        }
    }
    s.mean_sumrate_slow = slow_sum / static_cast<double>(drops.size());
    s.feasibility_rate =
        vue_slots > 0 ? static_cast<double>(feasible) / static_cast<double>(vue_slots) : 1.0;
    s.vue_outage = windows > 0 ? static_cast<double>(outage) / static_cast<double>(windows) : 0.0;

    if (any_ssf) {
        for (const auto& d : drops)
            s.sumrate_samples.insert(s.sumrate_samples.end(), d.sumrate_ssf_samples.begin(),
                                     d.sumrate_ssf_samples.end());
    } else {
        for (const auto& d : drops) s.sumrate_samples.push_back(d.sumrate_slow);
    }
    std::sort(s.sumrate_samples.begin(), s.sumrate_samples.end());
    for (auto& v : s.vue_bits) std::sort(v.begin(), v.end());
    return s;
}

}  // namespace d2d
