#include <catch2/catch_amalgamated.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "d2d/config.hpp"
#include "d2d/runner.hpp"

using Catch::Approx;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const char* tag) {
    const fs::path p = fs::temp_directory_path() / (std::string("d2d_test_") + tag);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    REQUIRE(f.good());
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

// small paired setup that exercises all schemes in well under a second
json small_run_config() {
    return json{
        {"scenario",
         {{"num_subbands", 4},
          {"num_cues", 2},
          {"num_vue_pairs", 1},
          {"cue_rbs", {2, 2}},
          {"vue_rbs", {2}}}},
        {"gamma_t_db", 15.0},
        {"schemes", {"srbp", "feng", "zulhasnine"}},
        {"num_drops", 4},
        {"num_fading", 3},
        {"seed", 99}};
}

}  // namespace

TEST_CASE("empty config keeps every default") {
    const auto cfg = d2d::parse_config(json::object());
    CHECK(cfg.scenario.region_side_m == 444.0);
    CHECK(cfg.scenario.building_side_m == 120.0);
    CHECK(cfg.scenario.num_subbands == 4);
    CHECK(cfg.scenario.num_cues == 4);
    CHECK(cfg.scenario.num_vue_pairs == 2);
    CHECK(cfg.scenario.v2v_distance_m == 18.0);
    CHECK(cfg.scenario.cue_max_power_dbm == 24.0);
    CHECK(cfg.scenario.vue_max_power_dbm == 24.0);
    CHECK(cfg.scenario.noise_dbm == -117.0);
    CHECK(cfg.channel.ue_enb.pathloss_intercept_db == 15.3);
    CHECK(cfg.channel.ue_enb.pathloss_exponent == 3.76);
    CHECK(cfg.channel.ue_ue.pathloss_exponent == 4.0);
    CHECK(cfg.channel.ue_ue.nlos_extra_loss_db == 30.0);
    CHECK(cfg.qos.payload_bits == 12800);
    CHECK(cfg.qos.max_outage == 1e-5);
    CHECK(cfg.qos.latency_units == 10);
    CHECK(cfg.qos.rbs_per_unit == 2);
    CHECK(cfg.mc.num_samples == 10'000'000);
    CHECK_FALSE(cfg.has_direct_threshold());
    CHECK(cfg.schemes == std::vector<std::string>{"srbp"});
    CHECK(cfg.num_drops == 1);
    CHECK(cfg.num_fading == 0);
    CHECK(cfg.seed == 1);
    CHECK(cfg.output_dir == "out");
    CHECK(cfg.phi == 0.0);
    // omitted lists fall back to the even split and the per-unit demand
    CHECK(cfg.scenario.cue_rbs == std::vector<int>{1, 1, 1, 1});
    CHECK(cfg.scenario.vue_rbs == std::vector<int>{2, 2});
    CHECK(cfg.scenario.seed == cfg.seed);
}

TEST_CASE("full override round-trips every field") {
    const json j = {
        {"scenario",
         {{"region_side_m", 500.0},
          {"building_side_m", 100.0},
          {"enb_height_m", 30.0},
          {"ue_height_m", 1.6},
          {"num_subbands", 6},
          {"num_cues", 3},
          {"num_vue_pairs", 2},
          {"cue_rbs", {1, 2, 3}},
          {"vue_rbs", {2, 2}},
          {"v2v_distance_m", 25.0},
          {"cue_max_power_dbm", 20.0},
          {"vue_max_power_dbm", 21.0},
          {"noise_dbm", -110.0},
          {"time_unit_ms", 1.0},
          {"rrm_period_ms", 50.0}}},
        {"channel",
         {{"ue_enb",
           {{"pathloss_intercept_db", 10.0},
            {"pathloss_exponent", 3.5},
            {"shadowing_sigma_db", 6.0},
            {"nlos_extra_loss_db", 0.0}}},
          {"ue_ue", {{"pathloss_exponent", 3.0}, {"nlos_extra_loss_db", 20.0}}}}},
        {"qos",
         {{"payload_bits", 6400},
          {"max_outage", 1e-3},
          {"latency_units", 5},
          {"symbols_per_rb", 72},
          {"rbs_per_message", 10},
          {"rbs_per_unit", 2}}},
        {"mc", {{"num_samples", 1e6}, {"seed", 7}, {"bracket_lo_db", 5.0},
                {"bracket_hi_db", 45.0}, {"tol_db", 0.1}}},
        {"gamma_t_db", 19.82},
        {"schemes", {"feng", "optimal"}},
        {"num_drops", 12},
        {"num_fading", 4},
        {"seed", 42},
        {"output_dir", "results"},
        {"phi", 2.5}};
    const auto cfg = d2d::parse_config(j);
    CHECK(cfg.scenario.region_side_m == 500.0);
    CHECK(cfg.scenario.building_side_m == 100.0);
    CHECK(cfg.scenario.enb_height_m == 30.0);
    CHECK(cfg.scenario.ue_height_m == 1.6);
    CHECK(cfg.scenario.num_subbands == 6);
    CHECK(cfg.scenario.cue_rbs == std::vector<int>{1, 2, 3});
    CHECK(cfg.scenario.vue_rbs == std::vector<int>{2, 2});
    CHECK(cfg.scenario.v2v_distance_m == 25.0);
    CHECK(cfg.scenario.cue_max_power_dbm == 20.0);
    CHECK(cfg.scenario.vue_max_power_dbm == 21.0);
    CHECK(cfg.scenario.noise_dbm == -110.0);
    CHECK(cfg.scenario.time_unit_ms == 1.0);
    CHECK(cfg.scenario.rrm_period_ms == 50.0);
    CHECK(cfg.channel.ue_enb.pathloss_intercept_db == 10.0);
    CHECK(cfg.channel.ue_enb.pathloss_exponent == 3.5);
    CHECK(cfg.channel.ue_enb.shadowing_sigma_db == 6.0);
    // partial channel override keeps the other class fields at their defaults
    CHECK(cfg.channel.ue_ue.pathloss_exponent == 3.0);
    CHECK(cfg.channel.ue_ue.nlos_extra_loss_db == 20.0);
    CHECK(cfg.channel.ue_ue.pathloss_intercept_db == 32.0);
    CHECK(cfg.channel.ue_ue.shadowing_sigma_db == 4.0);
    CHECK(cfg.qos.payload_bits == 6400);
    CHECK(cfg.qos.max_outage == 1e-3);
    CHECK(cfg.qos.latency_units == 5);
    CHECK(cfg.qos.symbols_per_rb == 72);
    CHECK(cfg.qos.rbs_per_message == 10);
    CHECK(cfg.mc.num_samples == 1'000'000);
    CHECK(cfg.mc.seed == 7);
    CHECK(cfg.mc.bracket_lo_db == 5.0);
    CHECK(cfg.mc.bracket_hi_db == 45.0);
    CHECK(cfg.mc.tol_db == 0.1);
    CHECK(cfg.has_direct_threshold());
    CHECK(cfg.gamma_t_db == 19.82);
    CHECK(cfg.schemes == std::vector<std::string>{"feng", "optimal"});
    CHECK(cfg.num_drops == 12);
    CHECK(cfg.num_fading == 4);
    CHECK(cfg.seed == 42);
    CHECK(cfg.scenario.seed == 42);
    CHECK(cfg.output_dir == "results");
    CHECK(cfg.phi == 2.5);
}

TEST_CASE("omitted block lists use the even split and the per-unit demand") {
    const json j = {{"scenario",
                     {{"num_subbands", 100}, {"num_cues", 10}, {"num_vue_pairs", 5}}},
                    {"qos", {{"rbs_per_unit", 3}, {"rbs_per_message", 30}}}};
    const auto cfg = d2d::parse_config(j);
    CHECK(cfg.scenario.cue_rbs == std::vector<int>(10, 10));
    CHECK(cfg.scenario.vue_rbs == std::vector<int>(5, 3));
}

TEST_CASE("uneven split without explicit blocks is rejected") {
    const json j = {{"scenario", {{"num_subbands", 5}, {"num_cues", 2}}}};
    CHECK_THROWS_MATCHES(d2d::parse_config(j), d2d::ConfigError,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("not divisible")));
}

TEST_CASE("unknown fields are rejected at every level") {
    const auto expect_unknown = [](const json& j) {
        CHECK_THROWS_MATCHES(d2d::parse_config(j), d2d::ConfigError,
                             Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring(
                                 "config: unknown field")));
    };
    expect_unknown(json{{"bogus", 1}});
    expect_unknown(json{{"scenario", {{"speed_kmh", 60}}}});
    expect_unknown(json{{"channel", {{"ue_sat", json::object()}}}});
    expect_unknown(json{{"channel", {{"ue_ue", {{"rician_k_db", 9}}}}}});
    expect_unknown(json{{"qos", {{"harq", true}}}});
    expect_unknown(json{{"mc", {{"threads", 4}}}});
}

TEST_CASE("type errors name the offending field") {
    CHECK_THROWS_MATCHES(d2d::parse_config(json{{"num_drops", "many"}}), d2d::ConfigError,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("num_drops")));
    CHECK_THROWS_AS(d2d::parse_config(json{{"gamma_t_db", "high"}}), d2d::ConfigError);
    CHECK_THROWS_AS(d2d::parse_config(json{{"schemes", {1, 2}}}), d2d::ConfigError);
    CHECK_THROWS_AS(d2d::parse_config(json{{"schemes", "srbp"}}), d2d::ConfigError);
    CHECK_THROWS_AS(d2d::parse_config(json{{"seed", -3}}), d2d::ConfigError);
    CHECK_THROWS_AS(d2d::parse_config(json{{"output_dir", 5}}), d2d::ConfigError);
    CHECK_THROWS_AS(
        d2d::parse_config(json{{"scenario", {{"cue_rbs", {1.5, 2.5}}}}}),
        d2d::ConfigError);
    CHECK_THROWS_AS(d2d::parse_config(json{{"mc", {{"num_samples", 1.5}}}}),
                    d2d::ConfigError);
    CHECK_THROWS_AS(
        d2d::parse_config(json{{"channel", {{"ue_ue", {{"pathloss_exponent", "four"}}}}}}),
        d2d::ConfigError);
}

TEST_CASE("validation catches inconsistent setups") {
    // cue_rbs must cover the band exactly
    CHECK_THROWS_AS(d2d::parse_config(json{{"scenario", {{"cue_rbs", {1, 1, 1, 2}}}}}),
                    d2d::ConfigError);
    // vehicle demand cannot exceed the band
    CHECK_THROWS_AS(d2d::parse_config(json{{"scenario", {{"vue_rbs", {3, 3}}}}}),
                    d2d::ConfigError);
    CHECK_THROWS_MATCHES(d2d::parse_config(json{{"schemes", {"srbp", "genie"}}}),
                         d2d::ConfigError,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("unknown scheme")));
    CHECK_THROWS_AS(d2d::parse_config(json{{"phi", -1.0}}), d2d::ConfigError);
    CHECK_THROWS_AS(d2d::parse_config(json{{"gamma_t_db", 200.0}}), d2d::ConfigError);
    CHECK_THROWS_AS(d2d::parse_config(json{{"num_drops", 0}}), d2d::ConfigError);
    CHECK_THROWS_AS(d2d::parse_config(json{{"schemes", json::array()}}), d2d::ConfigError);
}

TEST_CASE("config files load with parse diagnostics") {
    const auto dir = fresh_dir("cfgio");
    CHECK_THROWS_MATCHES(d2d::load_config((dir / "missing.json").string()), d2d::ConfigError,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("cannot open")));
    {
        std::ofstream f(dir / "broken.json");
        f << "{ \"seed\": ";
    }
    CHECK_THROWS_MATCHES(d2d::load_config((dir / "broken.json").string()), d2d::ConfigError,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("parse failure")));
    {
        std::ofstream f(dir / "good.json");
        f << R"({"seed": 5, "gamma_t_db": 20.0})";
    }
    const auto cfg = d2d::load_config((dir / "good.json").string());
    CHECK(cfg.seed == 5);
    CHECK(cfg.gamma_t_db == 20.0);
    fs::remove_all(dir);
}

TEST_CASE("repeated runs write byte-identical outputs") {
    auto j = small_run_config();
    const auto dir_a = fresh_dir("rep_a");
    const auto dir_b = fresh_dir("rep_b");
    d2d::RunOptions opt;
    opt.dump_matching = true;

    j["output_dir"] = dir_a.string();
    d2d::run_experiment(d2d::parse_config(j), opt);
    j["output_dir"] = dir_b.string();
    d2d::run_experiment(d2d::parse_config(j), opt);

    for (const char* name :
         {"sumrate_cdf.csv", "vue_bits_cdf.csv", "summary.csv", "matchings.csv"}) {
        INFO(name);
        const std::string a = slurp(dir_a / name);
        CHECK(a == slurp(dir_b / name));
        CHECK(!a.empty());
    }
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
}

TEST_CASE("worker count never changes the results") {
    auto j = small_run_config();
    j["num_drops"] = 6;
    const auto dir_a = fresh_dir("wrk_a");
    const auto dir_b = fresh_dir("wrk_b");

    j["output_dir"] = dir_a.string();
    d2d::RunOptions one;
    const auto out_one = d2d::run_experiment(d2d::parse_config(j), one);
    j["output_dir"] = dir_b.string();
    d2d::RunOptions four;
    four.workers = 4;
    const auto out_four = d2d::run_experiment(d2d::parse_config(j), four);

    for (const char* name : {"sumrate_cdf.csv", "vue_bits_cdf.csv", "summary.csv"}) {
        INFO(name);
        CHECK(slurp(dir_a / name) == slurp(dir_b / name));
    }
    REQUIRE(out_one.summaries.size() == out_four.summaries.size());
    for (std::size_t i = 0; i < out_one.summaries.size(); ++i) {
        CHECK(out_one.summaries[i].mean_sumrate_slow ==
              out_four.summaries[i].mean_sumrate_slow);
        CHECK(out_one.summaries[i].vue_outage == out_four.summaries[i].vue_outage);
    }
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
}

TEST_CASE("per-drop channels do not depend on the scheme list") {
    auto j = small_run_config();
    d2d::RunOptions opt;
    opt.write_csv = false;

    j["schemes"] = {"srbp"};
    const auto solo = d2d::run_experiment(d2d::parse_config(j), opt);
    j["schemes"] = {"feng", "srbp"};
    const auto paired = d2d::run_experiment(d2d::parse_config(j), opt);

    REQUIRE(paired.schemes[1] == "srbp");
    REQUIRE(solo.drops[0].size() == paired.drops[1].size());
    for (std::size_t d = 0; d < solo.drops[0].size(); ++d) {
        CHECK(solo.drops[0][d].sumrate_slow == paired.drops[1][d].sumrate_slow);
        CHECK(solo.drops[0][d].sumrate_ssf_samples == paired.drops[1][d].sumrate_ssf_samples);
    }
}

TEST_CASE("summary rows follow the configured scheme order") {
    auto j = small_run_config();
    const auto dir = fresh_dir("sumfmt");
    j["output_dir"] = dir.string();
    d2d::RunOptions opt;
    const auto out = d2d::run_experiment(d2d::parse_config(j), opt);

    std::ifstream f(dir / "summary.csv");
    std::string line;
    REQUIRE(std::getline(f, line));
    CHECK(line == "scheme,mean_sumrate,vue_outage,feasibility_rate");
    for (const auto& scheme : {"srbp", "feng", "zulhasnine"}) {
        REQUIRE(std::getline(f, line));
        CHECK(line.substr(0, line.find(',')) == scheme);
    }
    CHECK_FALSE(std::getline(f, line));

    for (const auto& s : out.summaries)
        CHECK(std::is_sorted(s.sumrate_samples.begin(), s.sumrate_samples.end()));
    fs::remove_all(dir);
}

TEST_CASE("worker failures surface as the original exception") {
    json j = {{"scenario",
               {{"num_subbands", 10},
                {"num_cues", 2},
                {"cue_rbs", {5, 5}},
                {"num_vue_pairs", 1},
                {"vue_rbs", {2}}}},
              {"gamma_t_db", 15.0},
              {"schemes", {"optimal"}},
              {"num_drops", 4}};
    d2d::RunOptions opt;
    opt.workers = 3;
    opt.write_csv = false;
    CHECK_THROWS_AS(d2d::run_experiment(d2d::parse_config(j), opt), d2d::SizeRefusalError);
}

TEST_CASE("runner derives the threshold when no direct value is given") {
    json j = small_run_config();
    j.erase("gamma_t_db");
    j["qos"] = {{"payload_bits", 240},  {"max_outage", 1e-2}, {"latency_units", 2},
                {"symbols_per_rb", 10}, {"rbs_per_message", 4}, {"rbs_per_unit", 2}};
    j["mc"] = {{"num_samples", 200000}, {"bracket_lo_db", -10.0}, {"bracket_hi_db", 40.0}};
    j["num_drops"] = 1;
    d2d::RunOptions opt;
    opt.write_csv = false;
    const auto out = d2d::run_experiment(d2d::parse_config(j), opt);
    CHECK(out.threshold_derived);
    CHECK(out.gamma_t_db > -10.0);
    CHECK(out.gamma_t_db < 40.0);
}
