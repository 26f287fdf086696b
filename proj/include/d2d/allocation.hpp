#pragma once
#include <algorithm>
#include <cmath>
#include <vector>

#include "d2d/errors.hpp"
#include "d2d/hungarian.hpp"
#include "d2d/rng.hpp"
#include "d2d/scenario.hpp"

// Stage 1 of the two-stage RRM scheme: split every user into one sub-user per
// resource block it needs, absorb the spare blocks with a dummy V-UE, score
// every sub-C-UE/sub-V-UE pairing under equal power with a penalized rate, and
// pick the pairing by maximum-weight matching. Power refinement is stage 2.

namespace d2d {

// Sub-user index spaces both have size F. khat maps a sub-V-UE to its owning
// V-UE, where index num_vue_pairs is the dummy that absorbs unclaimed blocks;
// mhat maps a sub-C-UE to its owning C-UE.
struct SubUserMap {
    std::vector<int> khat;
    std::vector<int> mhat;
    int num_vues = 0;  // real V-UEs; khat value == num_vues marks the dummy

    bool is_dummy(int sub_vue) const { return khat[sub_vue] == num_vues; }
    int size() const { return static_cast<int>(khat.size()); }
};

inline SubUserMap expand_subusers(const Scenario& scn) {
    const int f = scn.num_subbands;
    int demanded = 0;
    for (int e : scn.vue_rbs) demanded += e;
    if (demanded > f)
        throw CapacityError("expand_subusers: V-UEs demand " + std::to_string(demanded) +
                            " RBs per time unit but only " + std::to_string(f) + " exist");
    int granted = 0;
    for (int e : scn.cue_rbs) granted += e;
    if (granted != f)
        throw CapacityError("expand_subusers: cue_rbs must sum to num_subbands");

    SubUserMap sub;
    sub.num_vues = scn.num_vue_pairs;
    sub.mhat.reserve(f);
    for (int m = 0; m < scn.num_cues; ++m)
        for (int e = 0; e < scn.cue_rbs[m]; ++e) sub.mhat.push_back(m);
    sub.khat.reserve(f);
    for (int k = 0; k < scn.num_vue_pairs; ++k)
        for (int e = 0; e < scn.vue_rbs[k]; ++e) sub.khat.push_back(k);
    sub.khat.resize(f, scn.num_vue_pairs);  // dummy absorbs the remainder
    return sub;
}

// Equal split of each user's power budget across its sub-users; the stage-1
// operating point. Dummy sub-V-UEs transmit nothing.
inline std::vector<double> equal_power_cue(const Scenario& scn, const SubUserMap& sub) {
    std::vector<double> p(sub.size());
    for (int m = 0; m < sub.size(); ++m)
        p[m] = scn.cue_budget_mw() / static_cast<double>(scn.cue_rbs[sub.mhat[m]]);
    return p;
}

inline std::vector<double> equal_power_vue(const Scenario& scn, const SubUserMap& sub) {
    std::vector<double> p(sub.size());
    for (int k = 0; k < sub.size(); ++k)
        p[k] = sub.is_dummy(k)
                   ? 0.0
                   : scn.vue_budget_mw() / static_cast<double>(scn.vue_rbs[sub.khat[k]]);
    return p;
}

struct WeightMatrix {
    std::vector<std::vector<double>> w;  // [sub-C-UE][sub-V-UE]
    double phi = 0.0;
};

// Penalized pairing score: C-UE rate under the V-UE's equal-power
// interference, minus phi times the V-UE's SINR shortfall (zero when the
// shortfall is absent). Dummy sub-V-UEs neither interfere nor constrain; their
// infinite-gain sentinel is handled symbolically, not as an IEEE infinity.
// phi <= 0 selects the default 1e3 * F * (largest rate entry).
inline WeightMatrix build_weights(const Scenario& scn, const SubUserMap& sub,
                                  const LinkGains& gains, double gamma_lin, double phi = 0.0) {
    const int f = sub.size();
    const double sigma2 = gains.noise_mw;
    const std::vector<double> pc = equal_power_cue(scn, sub);
    const std::vector<double> pv = equal_power_vue(scn, sub);

    WeightMatrix wm;
    wm.w.assign(f, std::vector<double>(f, 0.0));
    std::vector<std::vector<double>> shortfall(f, std::vector<double>(f, 0.0));
    double max_rate = 0.0;
    for (int m = 0; m < f; ++m) {
        const double hp = gains.cue_to_enb[sub.mhat[m]];
        for (int k = 0; k < f; ++k) {
            double rate;
            if (sub.is_dummy(k)) {
                rate = rng::fast_log2(1.0 + pc[m] * hp / sigma2);
            } else {
                const int kv = sub.khat[k];
                const double gp = gains.vue_to_enb[kv];
                const double h = gains.vue_pair[kv];
                const double g = gains.cue_to_vue[sub.mhat[m]][kv];
                rate = rng::fast_log2(1.0 + pc[m] * hp / (sigma2 + pv[k] * gp));
                const double sinr_v = pv[k] * h / (sigma2 + pc[m] * g);
                shortfall[m][k] = std::min(sinr_v - gamma_lin, 0.0);
            }
            wm.w[m][k] = rate;
            max_rate = std::max(max_rate, rate);
        }
    }

    wm.phi = phi > 0.0 ? phi : 1e3 * static_cast<double>(f) * std::max(max_rate, 1.0);
    for (int m = 0; m < f; ++m)
        for (int k = 0; k < f; ++k) wm.w[m][k] += wm.phi * shortfall[m][k];
    return wm;
}

// Stage-1 outcome: pair[m] is the sub-V-UE sharing sub-C-UE m's block, and
// rb_of_pair[m] the concrete RB index.
struct Assignment {
    std::vector<int> pair;
    std::vector<int> rb_of_pair;
    double total_weight = 0.0;
};

inline Assignment hungarian_max_weight(const WeightMatrix& wm) {
    const MatchingResult r = max_weight_assignment(wm.w);
    Assignment a;
    a.pair = r.col_of_row;
    a.rb_of_pair.assign(a.pair.size(), -1);
    a.total_weight = r.total_weight;
    return a;
}

// Orthogonal blocks are interchangeable, so the RB index is just the sub-C-UE
// index; kept as an explicit step so the output names physical blocks.
inline Assignment assign_rbs(Assignment a, const SubUserMap& sub) {
    if (static_cast<int>(a.pair.size()) != sub.size())
        throw InputError("assign_rbs: assignment and sub-user map sizes differ");
    a.rb_of_pair.resize(a.pair.size());
    for (std::size_t m = 0; m < a.pair.size(); ++m)
        a.rb_of_pair[m] = static_cast<int>(m);
    return a;
}

}  // namespace d2d
