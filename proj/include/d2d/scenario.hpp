#pragma once
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "d2d/errors.hpp"
#include "d2d/rng.hpp"
#include "d2d/units.hpp"

// Single-cell drop generation on a Manhattan-style grid: square buildings on a
// regular lattice, streets in between, one eNB, M' cellular users on the
// streets and K' vehicle pairs driving along them. A drop freezes positions
// and slow fading (path loss + shadowing) for one RRM period.

namespace d2d {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

inline double distance2d(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

struct LinkClassParams {
    double pathloss_intercept_db = 0.0;  // loss at 1 m
    double pathloss_exponent = 2.0;      // decades of loss per decade of distance
    double shadowing_sigma_db = 0.0;
    double nlos_extra_loss_db = 0.0;  // added when a building blocks the direct segment
};

struct ChannelConfig {
    LinkClassParams ue_enb{15.3, 3.76, 8.0, 0.0};
    LinkClassParams ue_ue{32.0, 4.0, 4.0, 30.0};
};

// Deterministic log-distance path loss in dB at 3D distance d (meters).
// Clamped below 1 m so the model never amplifies.
inline double pathloss_db(const LinkClassParams& p, double d3d_m) {
    const double d = std::max(d3d_m, 1.0);
    return p.pathloss_intercept_db + 10.0 * p.pathloss_exponent * std::log10(d);
}

struct Scenario {
    double region_side_m = 444.0;
    double building_side_m = 120.0;
    Point enb_position{222.0, 222.0};
    double enb_height_m = 26.0;
    double ue_height_m = 1.5;
    int num_subbands = 4;   // F
    int num_cues = 4;       // M'
    int num_vue_pairs = 2;  // K'
    std::vector<int> cue_rbs;  // RBs per C-UE per time unit, sums to F
    std::vector<int> vue_rbs;  // RBs per V-UE per time unit, sums to <= F
    double v2v_distance_m = 18.0;
    double cue_max_power_dbm = 24.0;
    double vue_max_power_dbm = 24.0;
    double noise_dbm = -117.0;
    double time_unit_ms = 0.5;
    double rrm_period_ms = 100.0;
    std::uint64_t seed = 1;

    double cue_budget_mw() const { return dbm_to_mw(cue_max_power_dbm); }
    double vue_budget_mw() const { return dbm_to_mw(vue_max_power_dbm); }
    double noise_mw() const { return dbm_to_mw(noise_dbm); }

    int total_vue_rbs() const {
        int sum = 0;
        for (int e : vue_rbs) sum += e;
        return sum;
    }

    void validate() const {
        auto fail = [](const std::string& msg) { throw ConfigError("scenario: " + msg); };
        if (!(region_side_m > 0.0)) fail("region_side_m must be > 0");
        if (!(building_side_m > 0.0)) fail("building_side_m must be > 0");
        if (num_subbands < 1) fail("num_subbands must be >= 1");
        if (num_cues < 1) fail("num_cues must be >= 1");
        if (num_vue_pairs < 0) fail("num_vue_pairs must be >= 0");
        if (!(v2v_distance_m > 0.0)) fail("v2v_distance_m must be > 0");
        if (!(enb_height_m >= 0.0) || !(ue_height_m >= 0.0)) fail("heights must be >= 0");
        if (!std::isfinite(cue_max_power_dbm) || !std::isfinite(vue_max_power_dbm))
            fail("power limits must be finite");
        if (!std::isfinite(noise_dbm)) fail("noise_dbm must be finite");
        if (!(time_unit_ms > 0.0) || !(rrm_period_ms > 0.0)) fail("time scales must be > 0");
        if (static_cast<int>(cue_rbs.size()) != num_cues)
            fail("cue_rbs must list one RB count per C-UE");
        if (static_cast<int>(vue_rbs.size()) != num_vue_pairs)
            fail("vue_rbs must list one RB count per V-UE");
        int sum_c = 0;
        for (int e : cue_rbs) {
            if (e < 1) fail("every cue_rbs entry must be >= 1");
            sum_c += e;
        }
        if (sum_c != num_subbands) fail("cue_rbs must sum to num_subbands (bandwidth fairness)");
        int sum_v = 0;
        for (int e : vue_rbs) {
            if (e < 1) fail("every vue_rbs entry must be >= 1");
            sum_v += e;
        }
        if (sum_v > num_subbands) fail("vue_rbs must sum to at most num_subbands");
    }
};

// Building lattice derived from region and building side lengths: count
// blocks per axis with equal-width streets between and around them.
class ManhattanGrid {
public:
    ManhattanGrid(double region_side, double building_side)
        : region_(region_side), block_(building_side) {
        count_ = static_cast<int>(std::floor(region_ / block_));
        while (count_ > 0 && count_ * block_ >= region_) --count_;
        street_ = (region_ - count_ * block_) / (count_ + 1);
    }

    double region() const { return region_; }
    double street_width() const { return street_; }
    int blocks_per_axis() const { return count_; }

    // strict interior of some building
    bool inside_building(Point p) const { return strip_interior(p.x) && strip_interior(p.y); }

    bool on_street(Point p) const {
        return p.x >= 0.0 && p.x <= region_ && p.y >= 0.0 && p.y <= region_ &&
               !inside_building(p);
    }

    // lower edge of street s in [0, count_]
    double street_low(int s) const { return s * (block_ + street_); }

    // Does the open segment (a, b) cross a building interior?
    bool segment_blocked(Point a, Point b) const {
        for (int i = 0; i < count_; ++i) {
            const double x1 = street_ + i * (block_ + street_);
            for (int j = 0; j < count_; ++j) {
                const double y1 = street_ + j * (block_ + street_);
                if (segment_hits_rect(a, b, x1, x1 + block_, y1, y1 + block_)) return true;
            }
        }
        return false;
    }

private:
    bool strip_interior(double c) const {
        const double u = c - street_;
        if (u <= 0.0) return false;
        const int cell = static_cast<int>(std::floor(u / (block_ + street_)));
        if (cell < 0 || cell >= count_) return false;
        const double off = u - cell * (block_ + street_);
        return off > 0.0 && off < block_;
    }

    // strict-interior slab clipping; touching an edge or corner does not block
    static bool segment_hits_rect(Point a, Point b, double x1, double x2, double y1, double y2) {
        double t_lo = 0.0, t_hi = 1.0;
        const double d[2] = {b.x - a.x, b.y - a.y};
        const double p0[2] = {a.x, a.y};
        const double lo[2] = {x1, y1}, hi[2] = {x2, y2};
        for (int ax = 0; ax < 2; ++ax) {
            if (d[ax] == 0.0) {
                if (p0[ax] <= lo[ax] || p0[ax] >= hi[ax]) return false;
            } else {
                double t1 = (lo[ax] - p0[ax]) / d[ax];
                double t2 = (hi[ax] - p0[ax]) / d[ax];
                if (t1 > t2) std::swap(t1, t2);
                t_lo = std::max(t_lo, t1);
                t_hi = std::min(t_hi, t2);
                if (t_lo >= t_hi) return false;
            }
        }
        return true;
    }

    double region_;
    double block_;
    double street_;
    int count_;
};

struct DropPositions {
    Point enb;
    std::vector<Point> cue;
    std::vector<Point> vue_tx;
    std::vector<Point> vue_rx;
};

// Slow-fading power gains for one drop, all linear; noise in mW.
struct LinkGains {
    std::vector<double> cue_to_enb;               // desired C-UE uplink, size M'
    std::vector<double> vue_to_enb;               // V-UE tx -> eNB interference, size K'
    std::vector<double> vue_pair;                 // V-UE tx -> worst pair receiver, size K'
    std::vector<std::vector<double>> cue_to_vue;  // C-UE -> V-UE rx interference, [M'][K']
    double noise_mw = 0.0;
};

inline double slow_gain_linear(const LinkClassParams& cls, double d3d_m, bool blocked,
                               double shadow_db) {
    const double loss = pathloss_db(cls, d3d_m) + (blocked ? cls.nlos_extra_loss_db : 0.0);
    return db_to_linear(-loss + shadow_db);
}

inline std::pair<DropPositions, LinkGains> generate_drop(const Scenario& scn,
                                                         const ChannelConfig& cfg,
                                                         int drop_index) {
    scn.validate();
    const ManhattanGrid grid(scn.region_side_m, scn.building_side_m);
    rng::Stream rng(rng::stream_key(rng::stream_key(scn.seed, 0xD709), drop_index));

    DropPositions pos;
    pos.enb = scn.enb_position;
    const int max_tries = 10000;

    for (int m = 0; m < scn.num_cues; ++m) {
        bool placed = false;
        for (int t = 0; t < max_tries && !placed; ++t) {
            Point p{rng.uniform(0.0, grid.region()), rng.uniform(0.0, grid.region())};
            if (grid.on_street(p)) {
                pos.cue.push_back(p);
                placed = true;
            }
        }
        if (!placed) throw PlacementError("could not place C-UE on street area");
    }

    const double dv = scn.v2v_distance_m;
    for (int k = 0; k < scn.num_vue_pairs; ++k) {
        bool placed = false;
        for (int t = 0; t < max_tries && !placed; ++t) {
            const bool vertical = rng.coin();
            const int sidx = static_cast<int>(rng.below(grid.blocks_per_axis() + 1));
            const double lane = grid.street_low(sidx) + rng.uniform(0.0, grid.street_width());
            const double along = rng.uniform(0.0, grid.region());
            const bool fwd_ok = along + dv <= grid.region();
            const bool bwd_ok = along - dv >= 0.0;
            if (!fwd_ok && !bwd_ok) continue;
            const double dir = (fwd_ok && bwd_ok) ? (rng.coin() ? 1.0 : -1.0)
                                                  : (fwd_ok ? 1.0 : -1.0);
            Point tx = vertical ? Point{lane, along} : Point{along, lane};
            Point rx = vertical ? Point{lane, along + dir * dv} : Point{along + dir * dv, lane};
            pos.vue_tx.push_back(tx);
            pos.vue_rx.push_back(rx);
            placed = true;
        }
        if (!placed) throw PlacementError("could not place V-UE pair on a street");
    }

    LinkGains gains;
    gains.noise_mw = scn.noise_mw();
    const double dh_enb = scn.enb_height_m - scn.ue_height_m;

    auto link = [&](const LinkClassParams& cls, Point a, Point b, double dz) {
        const double d3d = std::sqrt(distance2d(a, b) * distance2d(a, b) + dz * dz);
        const bool blocked = cls.nlos_extra_loss_db != 0.0 && grid.segment_blocked(a, b);
        const double shadow = cls.shadowing_sigma_db * rng.normal();
        return slow_gain_linear(cls, d3d, blocked, shadow);
    };

    gains.cue_to_enb.reserve(scn.num_cues);
    for (int m = 0; m < scn.num_cues; ++m)
        gains.cue_to_enb.push_back(link(cfg.ue_enb, pos.cue[m], pos.enb, dh_enb));
    gains.vue_to_enb.reserve(scn.num_vue_pairs);
    for (int k = 0; k < scn.num_vue_pairs; ++k)
        gains.vue_to_enb.push_back(link(cfg.ue_enb, pos.vue_tx[k], pos.enb, dh_enb));
    gains.vue_pair.reserve(scn.num_vue_pairs);
    for (int k = 0; k < scn.num_vue_pairs; ++k)
        gains.vue_pair.push_back(link(cfg.ue_ue, pos.vue_tx[k], pos.vue_rx[k], 0.0));
    gains.cue_to_vue.assign(scn.num_cues, {});
    for (int m = 0; m < scn.num_cues; ++m) {
        gains.cue_to_vue[m].reserve(scn.num_vue_pairs);
        for (int k = 0; k < scn.num_vue_pairs; ++k)
            gains.cue_to_vue[m].push_back(link(cfg.ue_ue, pos.cue[m], pos.vue_rx[k], 0.0));
    }
    return {std::move(pos), std::move(gains)};
}

}  // namespace d2d
