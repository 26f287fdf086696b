#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "d2d/allocation.hpp"
#include "d2d/power.hpp"

namespace d2d {

struct SchemeResult {
    Assignment assignment;
    PowerAllocation power;
};

inline SchemeResult run_srbp(const SubUserMap& sub, const LinkGains& gains, const Scenario& scn,
                             double gamma_lin, double phi = 0.0, PowerTrace* trace = nullptr) {
    const WeightMatrix wm = build_weights(scn, sub, gains, gamma_lin, phi);
    SchemeResult out;
    out.assignment = assign_rbs(hungarian_max_weight(wm), sub);
    out.power = solve_power(out.assignment, sub, gains, scn, gamma_lin, trace);
    return out;
}

namespace detail {

inline double slow_sum_rate(const Assignment& a, const SubUserMap& sub, const LinkGains& gains,
                            const std::vector<double>& s, const std::vector<double>& p) {
    double total = 0.0;
    for (int m = 0; m < sub.size(); ++m) {
        const int k = a.pair[m];
        const double hp = gains.cue_to_enb[sub.mhat[m]];
        const double inter = sub.is_dummy(k) ? 0.0 : p[k] * gains.vue_to_enb[sub.khat[k]];
        total += std::log2(1.0 + s[m] * hp / (gains.noise_mw + inter));
    }
    return total;
}

inline void flag_vue(PowerAllocation& pa, int kv) {
    auto& v = pa.infeasible_vues;
    if (std::find(v.begin(), v.end(), kv) == v.end()) v.push_back(kv);
    pa.status = PowerStatus::InfeasibleVue;
}

}  // namespace detail

// greedy pairing by strongest uplink, real sub-V-UEs handed out before any RB
// is left vehicle-free, then one-shot interference reduction down to the SINR
// floor of the paired V-UE
inline SchemeResult modified_zulhasnine(const SubUserMap& sub, const LinkGains& gains,
                                        const Scenario& scn, double gamma_lin) {
    const int f = sub.size();
    const double sigma2 = gains.noise_mw;
    SchemeResult out;
    out.assignment.pair.assign(f, -1);
    out.assignment.rb_of_pair.assign(f, -1);
    out.power.status = PowerStatus::Optimal;
    out.power.cue_power = equal_power_cue(scn, sub);
    out.power.vue_power = equal_power_vue(scn, sub);

    std::vector<int> order(f);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int lhs, int rhs) {
        return out.power.cue_power[lhs] * gains.cue_to_enb[sub.mhat[lhs]] >
               out.power.cue_power[rhs] * gains.cue_to_enb[sub.mhat[rhs]];
    });
    std::vector<char> taken(f, 0);
    for (int m : order) {
        int best_k = -1;
        double best_inter = 0.0;
        for (int k = 0; k < f; ++k) {
            if (taken[k] || sub.is_dummy(k)) continue;
            const double inter =
                out.power.cue_power[m] * gains.cue_to_vue[sub.mhat[m]][sub.khat[k]];
            if (best_k < 0 || inter < best_inter) {
                best_k = k;
                best_inter = inter;
            }
        }
        if (best_k < 0) {
            for (int k = 0; k < f; ++k) {
                if (!taken[k]) {
                    best_k = k;
                    break;
                }
            }
        }
        taken[best_k] = 1;
        out.assignment.pair[m] = best_k;
        out.assignment.rb_of_pair[m] = m;
    }

    for (int m = 0; m < f; ++m) {
        const int k = out.assignment.pair[m];
        if (sub.is_dummy(k)) continue;
        const int kv = sub.khat[k];
        const double h = gains.vue_pair[kv];
        const double g = gains.cue_to_vue[sub.mhat[m]][kv];
        const double pv = out.power.vue_power[k];
        double& s = out.power.cue_power[m];
        if (pv * h / (sigma2 + s * g) >= gamma_lin) continue;
        if (pv * h / sigma2 < gamma_lin) {
            // even a silent C-UE cannot save this V-UE
            s = 0.0;
            detail::flag_vue(out.power, kv);
        } else {
            s = (pv * h / gamma_lin - sigma2) / g;
        }
    }
    out.power.objective_bits = detail::slow_sum_rate(out.assignment, sub, gains,
                                                     out.power.cue_power, out.power.vue_power);
    return out;
}

// admit pairs that can reach the SINR floor inside the power box; the vehicular
// side then transmits at its per-block cap and the cellular power is cut only
// as far as the floor demands, after which Hungarian matches on the resulting
// cellular rates
inline SchemeResult modified_feng(const SubUserMap& sub, const LinkGains& gains,
                                  const Scenario& scn, double gamma_lin) {
    const int f = sub.size();
    const double sigma2 = gains.noise_mw;
    constexpr double kSentinel = -1e9;

    std::vector<std::vector<double>> w(f, std::vector<double>(f));
    std::vector<std::vector<double>> s_star(f, std::vector<double>(f));
    std::vector<std::vector<double>> p_star(f, std::vector<double>(f));
    const std::vector<double> cue_caps = equal_power_cue(scn, sub);
    for (int m = 0; m < f; ++m) {
        const double cap_s = cue_caps[m];
        const double hp = gains.cue_to_enb[sub.mhat[m]];
        for (int k = 0; k < f; ++k) {
            if (sub.is_dummy(k)) {
                s_star[m][k] = cap_s;
                p_star[m][k] = 0.0;
                w[m][k] = std::log2(1.0 + cap_s * hp / sigma2);
                continue;
            }
            const int kv = sub.khat[k];
            const double cap_p = scn.vue_budget_mw() / static_cast<double>(scn.vue_rbs[kv]);
            const double h = gains.vue_pair[kv];
            const double g = gains.cue_to_vue[sub.mhat[m]][kv];
            const double gp = gains.vue_to_enb[kv];
            if (gamma_lin * sigma2 / h > cap_p) {
                s_star[m][k] = cap_s;
                p_star[m][k] = cap_p;
                w[m][k] = kSentinel;
                continue;
            }
            double s = cap_s;
            if (g > 0.0) s = std::min(s, (cap_p * h / gamma_lin - sigma2) / g);
            s_star[m][k] = s;
            p_star[m][k] = cap_p;
            w[m][k] = std::log2(1.0 + s * hp / (sigma2 + cap_p * gp));
        }
    }

    const MatchingResult mr = max_weight_assignment(w);
    SchemeResult out;
    out.assignment = assign_rbs(Assignment{mr.col_of_row, std::vector<int>(f, -1), mr.total_weight}, sub);
    out.power.status = PowerStatus::Optimal;
    out.power.cue_power.resize(f);
    out.power.vue_power.assign(f, 0.0);
    for (int m = 0; m < f; ++m) {
        const int k = out.assignment.pair[m];
        out.power.cue_power[m] = s_star[m][k];
        if (!sub.is_dummy(k)) out.power.vue_power[k] = p_star[m][k];
        if (w[m][k] <= kSentinel) detail::flag_vue(out.power, sub.khat[k]);
    }
    std::sort(out.power.infeasible_vues.begin(), out.power.infeasible_vues.end());
    out.power.objective_bits = detail::slow_sum_rate(out.assignment, sub, gains,
                                                     out.power.cue_power, out.power.vue_power);
    return out;
}

// brute force over every perfect matching, each scored by the same power
// stage, preferring fewer QoS violations and then higher rate
inline SchemeResult exhaustive_optimal(const SubUserMap& sub, const LinkGains& gains,
                                       const Scenario& scn, double gamma_lin) {
    const int f = sub.size();
    if (f > 8)
        throw SizeRefusalError("exhaustive search refused: " + std::to_string(f) +
                               " subbands means " + std::to_string(f) +
                               "! matchings; limit is 8");
    std::vector<int> perm(f);
    std::iota(perm.begin(), perm.end(), 0);
    SchemeResult best;
    bool have_best = false;
    std::size_t best_violations = 0;
    do {
        Assignment a;
        a.pair = perm;
        a.rb_of_pair.resize(f);
        std::iota(a.rb_of_pair.begin(), a.rb_of_pair.end(), 0);
        PowerAllocation pa = solve_power(a, sub, gains, scn, gamma_lin);
        const std::size_t violations = pa.infeasible_vues.size();
        const bool better =
            !have_best || violations < best_violations ||
            (violations == best_violations && pa.objective_bits > best.power.objective_bits);
        if (better) {
            best.assignment = std::move(a);
            best.power = std::move(pa);
            best_violations = violations;
            have_best = true;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

}  // namespace d2d
