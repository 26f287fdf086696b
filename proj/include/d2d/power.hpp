#pragma once
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "d2d/allocation.hpp"
#include "d2d/errors.hpp"
#include "d2d/rng.hpp"
#include "d2d/scenario.hpp"

// Stage 2 of the two-stage RRM scheme. Every matched V-UE block runs at its
// SINR floor with equality, which eliminates the V-UE powers and leaves a
// concave maximization of the cellular sum rate in the C-UE powers alone,
// under per-C-UE budget simplices and per-V-UE budget halfspaces. Solved by
// projected gradient ascent (exact projection by dual coordinate ascent over
// the halfspace multipliers, Barzilai-Borwein step, Armijo backtracking).

namespace d2d {

enum class PowerStatus { Optimal, InfeasibleVue, InfeasibleCue };

struct PowerAllocation {
    std::vector<double> cue_power;     // S[m] per sub-C-UE, mW
    std::vector<double> vue_power;     // P[k] per sub-V-UE, mW
    PowerStatus status = PowerStatus::Optimal;
    std::vector<int> infeasible_vues;  // real V-UEs whose floor exceeds their budget
    double objective_bits = 0.0;       // cellular sum rate over all blocks
    int iterations = 0;
    double kkt_residual = 0.0;
};

struct FeasibilityReport {
    PowerStatus status = PowerStatus::Optimal;
    std::vector<int> infeasible_vues;
};

// Matching-independent corner test: V-UE k' cannot reach its floor within
// budget even with silent C-UEs iff E_v * gamma * sigma^2 / H > P_max_V.
inline FeasibilityReport feasibility_check(const SubUserMap& sub, const LinkGains& gains,
                                           const Scenario& scn, double gamma_lin) {
    FeasibilityReport rep;
    const double sigma2 = gains.noise_mw;
    for (int kv = 0; kv < sub.num_vues; ++kv) {
        const double need =
            static_cast<double>(scn.vue_rbs[kv]) * gamma_lin * sigma2 / gains.vue_pair[kv];
        if (need > scn.vue_budget_mw()) rep.infeasible_vues.push_back(kv);
    }
    if (!rep.infeasible_vues.empty()) rep.status = PowerStatus::InfeasibleVue;
    return rep;
}

// Per-iteration view of the solve, filled when a sink is supplied.
struct PowerTraceEntry {
    int iteration = 0;
    double objective_bits = 0.0;
    double step = 0.0;
    double kkt_residual = 0.0;
};
using PowerTrace = std::vector<PowerTraceEntry>;

namespace detail {

// Projection onto {y >= 0, sum y <= cap} restricted to idx, in place.
inline void project_capped_simplex(std::vector<double>& x, const std::vector<int>& idx,
                                   double cap, std::vector<double>& scratch) {
    double positive_sum = 0.0;
    for (int i : idx) positive_sum += std::max(x[i], 0.0);
    if (positive_sum <= cap) {
        for (int i : idx) x[i] = std::max(x[i], 0.0);
        return;
    }
    // water level lambda with sum max(x - lambda, 0) = cap
    scratch.clear();
    for (int i : idx) scratch.push_back(x[i]);
    std::sort(scratch.begin(), scratch.end(), std::greater<double>());
    double prefix = 0.0, lambda = 0.0;
    for (std::size_t j = 0; j < scratch.size(); ++j) {
        prefix += scratch[j];
        const double cand = (prefix - cap) / static_cast<double>(j + 1);
        if (j + 1 == scratch.size() || scratch[j + 1] <= cand) {
            lambda = cand;
            break;
        }
    }
    for (int i : idx) x[i] = std::max(x[i] - lambda, 0.0);
}

struct Halfspace {
    std::vector<int> idx;
    std::vector<double> w;
    double r = 0.0;
    double w2 = 0.0;  // squared norm of w
};

// Projection onto the intersection of the C-UE budget simplices and the
// V-UE budget halfspaces, by coordinate ascent on the halfspace multipliers.
// Every sub-user sits in exactly one simplex block and at most one halfspace
// row, so for fixed multipliers the projection splits into independent
// per-block simplex projections, and each multiplier is solved exactly by
// bisection (the row value is monotone in its multiplier). Rows touching
// disjoint blocks finish in one sweep; coupled rows converge by dual ascent.
// Bisection lands on the feasible side, so returned points satisfy every
// constraint regardless of how the sweep loop exits.
class FeasibleSet {
public:
    std::vector<std::vector<int>> cue_blocks;
    std::vector<Halfspace> vue_rows;

    void project(std::vector<double>& x) const {
        prepare();
        base_ = x;
        shift_.assign(x.size(), 0.0);
        lambda_.assign(vue_rows.size(), 0.0);
        for (std::size_t c = 0; c < cue_blocks.size(); ++c) reproject_block(c, x);

        for (int pass = 0; pass < 2000; ++pass) {
            double shifted = 0.0;
            for (std::size_t v = 0; v < vue_rows.size(); ++v) {
                if (vue_rows[v].w2 == 0.0) continue;
                const double before = lambda_[v];
                solve_row(v, x);
                shifted = std::max(shifted, std::abs(lambda_[v] - before));
            }
            if (shifted <= 1e-14 && violation(x) < 1e-12) break;
        }
    }

    // worst constraint violation, in normalized distance units
    double violation(const std::vector<double>& x) const {
        double drift = 0.0;
        for (const auto& blk : cue_blocks) {
            double s = 0.0;
            for (int i : blk) {
                drift = std::max(drift, -x[i]);
                s += x[i];
            }
            drift = std::max(drift, s - 1.0);
        }
        for (const auto& row : vue_rows) {
            if (row.w2 == 0.0) continue;
            double dot = 0.0;
            for (std::size_t j = 0; j < row.idx.size(); ++j) dot += row.w[j] * x[row.idx[j]];
            drift = std::max(drift, (dot - row.r) / std::sqrt(row.w2));
        }
        return drift;
    }

private:
    void prepare() const {
        if (prepared_) return;
        std::size_t n = 0;
        for (const auto& blk : cue_blocks)
            for (int i : blk) n = std::max(n, static_cast<std::size_t>(i) + 1);
        block_of_.assign(n, -1);
        for (std::size_t c = 0; c < cue_blocks.size(); ++c)
            for (int i : cue_blocks[c]) block_of_[i] = static_cast<int>(c);
        row_blocks_.assign(vue_rows.size(), {});
        for (std::size_t v = 0; v < vue_rows.size(); ++v) {
            auto& blocks = row_blocks_[v];
            for (int i : vue_rows[v].idx) {
                const int c = block_of_[i];
                if (std::find(blocks.begin(), blocks.end(), c) == blocks.end())
                    blocks.push_back(c);
            }
        }
        prepared_ = true;
    }

    void reproject_block(std::size_t c, std::vector<double>& x) const {
        for (int i : cue_blocks[c]) x[i] = base_[i] - shift_[i];
        project_capped_simplex(x, cue_blocks[c], 1.0, scratch_);
    }

    // row value at the current multipliers
    double row_dot(std::size_t v, const std::vector<double>& x) const {
        const auto& row = vue_rows[v];
        double dot = 0.0;
        for (std::size_t j = 0; j < row.idx.size(); ++j) dot += row.w[j] * x[row.idx[j]];
        return dot;
    }

    double eval_row(std::size_t v, double lam, std::vector<double>& x) const {
        const auto& row = vue_rows[v];
        for (std::size_t j = 0; j < row.idx.size(); ++j)
            shift_[row.idx[j]] = lam * row.w[j];
        for (int c : row_blocks_[v]) reproject_block(static_cast<std::size_t>(c), x);
        return row_dot(v, x) - row.r;
    }

    // exact 1-D complementarity solve for one multiplier, feasible side last
    void solve_row(std::size_t v, std::vector<double>& x) const {
        const auto& row = vue_rows[v];
        const double eps = 1e-13 * std::sqrt(row.w2);
        if (eval_row(v, 0.0, x) <= eps) {
            lambda_[v] = 0.0;
            return;
        }
        double lo = 0.0;
        double hi = std::max(lambda_[v], 1e-9);
        while (eval_row(v, hi, x) > 0.0) {
            lo = hi;
            hi *= 4.0;
            if (hi > 1e30) break;
        }
        for (int it = 0; it < 200 && hi - lo > 1e-15 * (1.0 + hi); ++it) {
            const double mid = 0.5 * (lo + hi);
            const double phi = eval_row(v, mid, x);
            if (phi > eps) lo = mid;
            else if (phi < -eps) hi = mid;
            else {
                hi = mid;
                break;
            }
        }
        eval_row(v, hi, x);
        lambda_[v] = hi;
    }

    mutable bool prepared_ = false;
    mutable std::vector<int> block_of_;
    mutable std::vector<std::vector<int>> row_blocks_;
    mutable std::vector<double> base_, shift_, lambda_, scratch_;
};

}  // namespace detail

// Stage-2 solve for a given matching. Infeasible V-UEs (corner test) are
// pinned to the power that exhausts their own budget, flagged, and removed
// from the program; the remaining concave program is solved to its global
// optimum and the V-UE powers are reconstructed from the SINR equalities.
inline PowerAllocation solve_power(const Assignment& a, const SubUserMap& sub,
                                   const LinkGains& gains, const Scenario& scn,
                                   double gamma_lin, PowerTrace* trace = nullptr) {
    const int f = sub.size();
    if (static_cast<int>(a.pair.size()) != f)
        throw InputError("solve_power: assignment size does not match sub-user map");
    const double sigma2 = gains.noise_mw;
    const double cap_c = scn.cue_budget_mw();
    const double cap_v = scn.vue_budget_mw();

    PowerAllocation out;
    const FeasibilityReport feas = feasibility_check(sub, gains, scn, gamma_lin);
    out.status = feas.status;
    out.infeasible_vues = feas.infeasible_vues;
    std::vector<char> pinned_vue(static_cast<std::size_t>(sub.num_vues) + 1, 0);
    for (int kv : feas.infeasible_vues) pinned_vue[kv] = 1;

    // rate_m(x) = log2(1 + amul x / (c0 + bmul x)) with S = cap_c x
    std::vector<double> amul(f), bmul(f), c0(f);
    for (int m = 0; m < f; ++m) {
        const int k = a.pair[m];
        const double hp = gains.cue_to_enb[sub.mhat[m]];
        amul[m] = hp * cap_c;
        if (sub.is_dummy(k)) {
            bmul[m] = 0.0;
            c0[m] = sigma2;
        } else {
            const int kv = sub.khat[k];
            const double gp = gains.vue_to_enb[kv];
            if (pinned_vue[kv]) {
                const double p_pin = cap_v / static_cast<double>(scn.vue_rbs[kv]);
                bmul[m] = 0.0;
                c0[m] = sigma2 + p_pin * gp;
            } else {
                const double h = gains.vue_pair[kv];
                const double g = gains.cue_to_vue[sub.mhat[m]][kv];
                bmul[m] = gamma_lin * g * gp / h * cap_c;
                c0[m] = sigma2 * (1.0 + gamma_lin * gp / h);
            }
        }
    }

    // constraint blocks over the normalized powers x = S / cap_c
    detail::FeasibleSet set;
    set.cue_blocks.assign(scn.num_cues, {});
    for (int m = 0; m < f; ++m) set.cue_blocks[sub.mhat[m]].push_back(m);
    {
        std::vector<detail::Halfspace> rows(static_cast<std::size_t>(sub.num_vues) + 1);
        for (int m = 0; m < f; ++m) {
            const int k = a.pair[m];
            if (sub.is_dummy(k)) continue;
            const int kv = sub.khat[k];
            if (pinned_vue[kv]) continue;
            const double h = gains.vue_pair[kv];
            const double g = gains.cue_to_vue[sub.mhat[m]][kv];
            rows[kv].idx.push_back(m);
            rows[kv].w.push_back(gamma_lin * g / h * cap_c);
            rows[kv].r = cap_v - static_cast<double>(scn.vue_rbs[kv]) * gamma_lin * sigma2 / h;
        }
        for (auto& row : rows) {
            if (row.idx.empty()) continue;
            row.w2 = std::inner_product(row.w.begin(), row.w.end(), row.w.begin(), 0.0);
            set.vue_rows.push_back(std::move(row));
        }
    }

    const auto objective = [&](const std::vector<double>& x) {
        double total = 0.0;
        for (int m = 0; m < f; ++m)
            total += rng::fast_log2(1.0 + amul[m] * x[m] / (c0[m] + bmul[m] * x[m]));
        return total;
    };
    const auto gradient = [&](const std::vector<double>& x, std::vector<double>& g) {
        constexpr double inv_ln2 = 1.4426950408889634;
        for (int m = 0; m < f; ++m) {
            const double lo = c0[m] + bmul[m] * x[m];
            const double hi = lo + amul[m] * x[m];
            g[m] = inv_ln2 * amul[m] * c0[m] / (lo * hi);
        }
    };
    // projected-gradient optimality measure: zero exactly at KKT points
    const auto kkt_residual = [&](const std::vector<double>& x, const std::vector<double>& g,
                                  std::vector<double>& y) {
        double gmax = 0.0;
        for (double v : g) gmax = std::max(gmax, std::abs(v));
        const double t = 1.0 / (1.0 + gmax);
        y = x;
        for (int m = 0; m < f; ++m) y[m] += t * g[m];
        set.project(y);
        double res = 0.0;
        for (int m = 0; m < f; ++m) res = std::max(res, std::abs(y[m] - x[m]));
        return res / t;
    };

    // interior-leaning start: half of the equal split, then projected
    std::vector<double> x(f);
    for (int m = 0; m < f; ++m)
        x[m] = 0.5 / static_cast<double>(scn.cue_rbs[sub.mhat[m]]);
    set.project(x);

    std::vector<double> g(f), x_prev(f), g_prev(f), x_trial(f), scratch(f);
    gradient(x, g);
    double fx = objective(x);
    double step;
    {
        double gmax = 0.0;
        for (double v : g) gmax = std::max(gmax, std::abs(v));
        step = 1.0 / std::max(gmax, 1e-12);
    }

    const int max_iters = 10000;
    int it = 0;
    double res = kkt_residual(x, g, scratch);
    for (; it < max_iters && res > 1e-8; ++it) {
        x_prev = x;
        g_prev = g;
        double alpha = step;
        bool accepted = false;
        for (int bt = 0; bt < 60; ++bt) {
            x_trial = x;
            for (int m = 0; m < f; ++m) x_trial[m] += alpha * g[m];
            set.project(x_trial);
            double ascent = 0.0;
            for (int m = 0; m < f; ++m) ascent += g[m] * (x_trial[m] - x[m]);
            if (ascent <= 0.0) {
                // a true ascent direction has positive inner product at any
                // step length, so a non-positive value only means the trial
                // step is too long for the projection accuracy
                alpha *= 0.5;
                continue;
            }
            const double f_trial = objective(x_trial);
            if (f_trial >= fx + 1e-4 * ascent) {
                x = x_trial;
                fx = f_trial;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted) break;
        gradient(x, g);
        res = kkt_residual(x, g, scratch);
        if (trace) trace->push_back({it + 1, fx, alpha, res});

        // Barzilai-Borwein step for the next iterate
        double sy = 0.0, ss = 0.0;
        for (int m = 0; m < f; ++m) {
            const double dx = x[m] - x_prev[m];
            const double dg = g[m] - g_prev[m];
            sy += dx * dg;
            ss += dx * dx;
        }
        if (sy < 0.0 && ss > 0.0) step = std::clamp(ss / (-sy), 1e-10, 1e4);
    }

    out.iterations = it;
    out.kkt_residual = res;
    out.cue_power.assign(f, 0.0);
    for (int m = 0; m < f; ++m) out.cue_power[m] = cap_c * x[m];

    // V-UE powers from the SINR equalities; pinned V-UEs exhaust their budget
    out.vue_power.assign(f, 0.0);
    for (int m = 0; m < f; ++m) {
        const int k = a.pair[m];
        if (sub.is_dummy(k)) continue;
        const int kv = sub.khat[k];
        if (pinned_vue[kv]) {
            out.vue_power[k] = cap_v / static_cast<double>(scn.vue_rbs[kv]);
        } else {
            const double h = gains.vue_pair[kv];
            const double g_ck = gains.cue_to_vue[sub.mhat[m]][kv];
            out.vue_power[k] = gamma_lin * (sigma2 + out.cue_power[m] * g_ck) / h;
        }
    }
    out.objective_bits = fx;
    return out;
}

}  // namespace d2d
