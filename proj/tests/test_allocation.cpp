#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <vector>

#include "d2d/allocation.hpp"

using Catch::Approx;

namespace {

d2d::Scenario four_band_scenario() {
    d2d::Scenario s;  // F=4, M'=4, K'=2 defaults
    s.cue_rbs = {1, 1, 1, 1};
    s.vue_rbs = {2, 2};
    return s;
}

void require_permutation(const std::vector<int>& p) {
    std::vector<int> seen(p.size(), 0);
    for (int v : p) {
        REQUIRE(v >= 0);
        REQUIRE(v < static_cast<int>(p.size()));
        ++seen[v];
    }
    for (int s : seen) REQUIRE(s == 1);
}

}  // namespace

TEST_CASE("sub-user expansion covers every block exactly once") {
    SECTION("four bands, no spare blocks") {
        const auto sub = d2d::expand_subusers(four_band_scenario());
        REQUIRE(sub.size() == 4);
        REQUIRE(sub.mhat == std::vector<int>{0, 1, 2, 3});
        REQUIRE(sub.khat == std::vector<int>{0, 0, 1, 1});
        REQUIRE(sub.num_vues == 2);
        for (int k = 0; k < 4; ++k) REQUIRE_FALSE(sub.is_dummy(k));
    }
    SECTION("hundred bands, five pairs, ninety dummy blocks") {
        d2d::Scenario s;
        s.num_subbands = 100;
        s.num_cues = 10;
        s.cue_rbs.assign(10, 10);
        s.num_vue_pairs = 5;
        s.vue_rbs.assign(5, 2);
        const auto sub = d2d::expand_subusers(s);
        REQUIRE(sub.size() == 100);
        int dummies = 0;
        for (int k = 0; k < 100; ++k) dummies += sub.is_dummy(k) ? 1 : 0;
        REQUIRE(dummies == 90);
        REQUIRE(sub.khat[0] == 0);
        REQUIRE(sub.khat[9] == 4);
        REQUIRE(sub.khat[10] == 5);  // first dummy
        for (int m = 0; m < 100; ++m) REQUIRE(sub.mhat[m] == m / 10);
    }
    SECTION("no pairs at all") {
        d2d::Scenario s = four_band_scenario();
        s.num_vue_pairs = 0;
        s.vue_rbs = {};
        const auto sub = d2d::expand_subusers(s);
        for (int k = 0; k < 4; ++k) REQUIRE(sub.is_dummy(k));
    }
    SECTION("over-subscribed pairs") {
        d2d::Scenario s = four_band_scenario();
        s.vue_rbs = {3, 2};
        REQUIRE_THROWS_AS(d2d::expand_subusers(s), d2d::CapacityError);
    }
    SECTION("cellular split must cover the band") {
        d2d::Scenario s = four_band_scenario();
        s.cue_rbs = {1, 1, 1, 3};
        REQUIRE_THROWS_AS(d2d::expand_subusers(s), d2d::CapacityError);
    }
}

TEST_CASE("equal power splits the budget over a user's blocks") {
    d2d::Scenario s;
    s.num_subbands = 100;
    s.num_cues = 10;
    s.cue_rbs.assign(10, 10);
    s.num_vue_pairs = 5;
    s.vue_rbs.assign(5, 2);
    const auto sub = d2d::expand_subusers(s);
    const auto pc = d2d::equal_power_cue(s, sub);
    const auto pv = d2d::equal_power_vue(s, sub);
    for (double p : pc) REQUIRE(p == Approx(s.cue_budget_mw() / 10.0));
    for (int k = 0; k < 10; ++k) REQUIRE(pv[k] == Approx(s.vue_budget_mw() / 2.0));
    for (int k = 10; k < 100; ++k) REQUIRE(pv[k] == 0.0);
}

TEST_CASE("weights match a direct evaluation of the penalized objective") {
    d2d::Scenario s;
    s.num_subbands = 3;
    s.num_cues = 2;
    s.cue_rbs = {2, 1};
    s.num_vue_pairs = 1;
    s.vue_rbs = {2};
    s.cue_max_power_dbm = 10.0;  // 10 mW
    s.vue_max_power_dbm = 0.0;   // 1 mW

    d2d::LinkGains gains;
    gains.noise_mw = 0.5;
    gains.cue_to_enb = {0.7, 0.05};
    gains.vue_to_enb = {0.12};
    gains.vue_pair = {2.0};
    gains.cue_to_vue = {{0.9}, {3.0}};

    const double gamma = 2.5;
    const auto sub = d2d::expand_subusers(s);
    const auto wm = d2d::build_weights(s, sub, gains, gamma, 7.0);
    REQUIRE(wm.phi == 7.0);

    const double pc[3] = {5.0, 5.0, 10.0};  // 10 mW over 2 blocks, then 1 block
    const double pv[3] = {0.5, 0.5, 0.0};
    for (int m = 0; m < 3; ++m) {
        const int mc = sub.mhat[m];
        for (int k = 0; k < 3; ++k) {
            double expect;
            if (k == 2) {  // dummy column
                expect = std::log2(1.0 + pc[m] * gains.cue_to_enb[mc] / gains.noise_mw);
            } else {
                const double rate = std::log2(
                    1.0 + pc[m] * gains.cue_to_enb[mc] /
                              (gains.noise_mw + pv[k] * gains.vue_to_enb[0]));
                const double sinr_v = pv[k] * gains.vue_pair[0] /
                                      (gains.noise_mw + pc[m] * gains.cue_to_vue[mc][0]);
                expect = rate + 7.0 * std::min(sinr_v - gamma, 0.0);
            }
            REQUIRE(wm.w[m][k] == Approx(expect).margin(1e-9));
        }
    }
}

TEST_CASE("default penalty coefficient scales with the largest rate") {
    d2d::Scenario s = four_band_scenario();
    d2d::LinkGains gains;
    gains.noise_mw = 1.0;
    gains.cue_to_enb = {1.0, 2.0, 4.0, 8.0};
    gains.vue_to_enb = {0.0, 0.0};
    gains.vue_pair = {100.0, 100.0};  // comfortably feasible, no penalty
    gains.cue_to_vue = {{0, 0}, {0, 0}, {0, 0}, {0, 0}};
    const auto sub = d2d::expand_subusers(s);
    const auto wm = d2d::build_weights(s, sub, gains, 1.0);
    // every P_c = budget, so the largest rate entry sits at H' = 8
    const double max_rate = std::log2(1.0 + s.cue_budget_mw() * 8.0);
    REQUIRE(wm.phi == Approx(1e3 * 4.0 * max_rate).epsilon(1e-9));
}

TEST_CASE("exact threshold boundary carries zero penalty") {
    d2d::Scenario s;
    s.num_subbands = 1;
    s.num_cues = 1;
    s.cue_rbs = {1};
    s.num_vue_pairs = 1;
    s.vue_rbs = {1};
    s.cue_max_power_dbm = 0.0;  // 1 mW
    s.vue_max_power_dbm = 0.0;

    d2d::LinkGains gains;
    gains.noise_mw = 1.0;
    gains.cue_to_enb = {3.0};
    gains.vue_to_enb = {1.0};
    gains.vue_pair = {2.0};
    gains.cue_to_vue = {{1.0}};
    const auto sub = d2d::expand_subusers(s);
    // sinr_v = 1*2 / (1 + 1*1) = 1 = gamma, exactly on the boundary
    for (double phi : {1.0, 1e9}) {
        const auto wm = d2d::build_weights(s, sub, gains, 1.0, phi);
        REQUIRE(wm.w[0][0] == Approx(std::log2(2.5)).margin(1e-12));
    }
}

TEST_CASE("penalty keeps the matching away from tempting but violating pairs") {
    d2d::Scenario s;
    s.num_subbands = 2;
    s.num_cues = 2;
    s.cue_rbs = {1, 1};
    s.num_vue_pairs = 2;
    s.vue_rbs = {1, 1};
    s.cue_max_power_dbm = 0.0;
    s.vue_max_power_dbm = 0.0;

    d2d::LinkGains gains;
    gains.noise_mw = 1.0;
    gains.cue_to_enb = {10.0, 100.0};
    gains.vue_to_enb = {0.01, 4.0};
    gains.vue_pair = {3.0, 3.0};
    // straight pairs see G = 1 (feasible, SINR 1.5), crossed pairs G = 9 (SINR 0.3)
    gains.cue_to_vue = {{1.0, 9.0}, {9.0, 1.0}};

    const double gamma = 1.0;
    const auto sub = d2d::expand_subusers(s);

    // crossing wins on pure rate
    const auto rate = [&](int m, int k) {
        return std::log2(1.0 + gains.cue_to_enb[m] / (1.0 + gains.vue_to_enb[k]));
    };
    REQUIRE(rate(0, 1) + rate(1, 0) > rate(0, 0) + rate(1, 1));

    const auto wm = d2d::build_weights(s, sub, gains, gamma);
    const auto a = d2d::hungarian_max_weight(wm);
    REQUIRE(a.pair == std::vector<int>{0, 1});

    // the selected matching satisfies every constraint, so its penalty is zero
    for (int m = 0; m < 2; ++m) {
        const int k = a.pair[m];
        const double sinr_v =
            gains.vue_pair[k] / (1.0 + gains.cue_to_vue[m][k]);
        REQUIRE(sinr_v >= gamma);
    }
}

TEST_CASE("matching wrapper preserves the optimum and fills rbs") {
    d2d::WeightMatrix wm;
    wm.w = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    wm.phi = 1.0;
    auto a = d2d::hungarian_max_weight(wm);
    REQUIRE(a.pair == std::vector<int>{0, 1, 2});
    REQUIRE(a.total_weight == 3.0);
    require_permutation(a.pair);

    d2d::Scenario s;
    s.num_subbands = 3;
    s.num_cues = 3;
    s.cue_rbs = {1, 1, 1};
    s.num_vue_pairs = 0;
    const auto sub = d2d::expand_subusers(s);
    a = d2d::assign_rbs(std::move(a), sub);
    REQUIRE(a.rb_of_pair == std::vector<int>{0, 1, 2});

    d2d::WeightMatrix tie;
    tie.w = {{1, 1}, {1, 1}};
    REQUIRE(d2d::hungarian_max_weight(tie).total_weight == 2.0);
}

TEST_CASE("rb filler rejects size mismatches") {
    d2d::Scenario s = four_band_scenario();
    const auto sub = d2d::expand_subusers(s);
    d2d::Assignment a;
    a.pair = {0, 1};
    REQUIRE_THROWS_AS(d2d::assign_rbs(a, sub), d2d::InputError);
}
