#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

#include <json.hpp>

#include "d2d/qos.hpp"
#include "d2d/scenario.hpp"

namespace d2d {

// Full experiment description: scenario plus channel model, QoS target,
// scheme list, and sampling controls. The SINR floor is either given
// directly (gamma_t_db) or derived from the QoS target by Monte Carlo.
struct ExperimentConfig {
    Scenario scenario;
    ChannelConfig channel;
    VueQos qos;
    McConfig mc;
    double gamma_t_db = std::numeric_limits<double>::quiet_NaN();
    std::vector<std::string> schemes{"srbp"};
    int num_drops = 1;
    int num_fading = 0;
    std::uint64_t seed = 1;
    std::string output_dir = "out";
    double phi = 0.0;  // stage-1 penalty weight, 0 selects the automatic value

    bool has_direct_threshold() const { return std::isfinite(gamma_t_db); }

    void validate() const {
        auto fail = [](const std::string& msg) { throw ConfigError("config: " + msg); };
        if (num_drops < 1) fail("num_drops must be >= 1");
        if (num_fading < 0) fail("num_fading must be >= 0");
        if (schemes.empty()) fail("schemes must not be empty");
        for (const auto& s : schemes)
            if (s != "srbp" && s != "zulhasnine" && s != "feng" && s != "optimal")
                fail("unknown scheme '" + s + "' (expected srbp, zulhasnine, feng, optimal)");
        if (output_dir.empty()) fail("output_dir must not be empty");
        if (phi < 0.0 || !std::isfinite(phi)) fail("phi must be finite and >= 0");
        scenario.validate();
        qos.validate();
        int cue_sum = 0;
        for (int e : scenario.cue_rbs) {
            if (e < 1) fail("cue_rbs entries must be >= 1");
            cue_sum += e;
        }
        if (static_cast<int>(scenario.cue_rbs.size()) != scenario.num_cues)
            fail("cue_rbs must list one entry per C-UE");
        if (cue_sum != scenario.num_subbands)
            fail("cue_rbs must sum to num_subbands (" +
                 std::to_string(scenario.num_subbands) + "), got " + std::to_string(cue_sum));
        int vue_sum = 0;
        for (int e : scenario.vue_rbs) {
            if (e < 1) fail("vue_rbs entries must be >= 1");
            vue_sum += e;
        }
        if (static_cast<int>(scenario.vue_rbs.size()) != scenario.num_vue_pairs)
            fail("vue_rbs must list one entry per V-UE pair");
        if (vue_sum > scenario.num_subbands)
            fail("vue_rbs sum " + std::to_string(vue_sum) + " exceeds num_subbands " +
                 std::to_string(scenario.num_subbands));
        if (has_direct_threshold() && (gamma_t_db < -50.0 || gamma_t_db > 100.0))
            fail("gamma_t_db out of sensible range [-50, 100]");
    }
};

namespace detail {

using nlohmann::json;

inline void expect_object(const json& j, const std::string& ctx) {
    if (!j.is_object()) throw ConfigError("config: " + ctx + " must be an object");
}

inline void reject_unknown(const json& j, const std::string& ctx,
                           std::initializer_list<const char*> allowed) {
    for (const auto& item : j.items()) {
        bool known = false;
        for (const char* a : allowed)
            if (item.key() == a) {
                known = true;
                break;
            }
        if (!known) throw ConfigError("config: unknown field '" + ctx + item.key() + "'");
    }
}

inline double get_double(const json& j, const std::string& ctx, const char* key, double def) {
    if (!j.contains(key)) return def;
    const auto& v = j.at(key);
    if (!v.is_number()) throw ConfigError("config: " + ctx + key + " must be a number");
    return v.get<double>();
}

inline int get_int(const json& j, const std::string& ctx, const char* key, int def) {
    if (!j.contains(key)) return def;
    const auto& v = j.at(key);
    if (!v.is_number_integer())
        throw ConfigError("config: " + ctx + key + " must be an integer");
    return v.get<int>();
}

inline std::uint64_t get_u64(const json& j, const std::string& ctx, const char* key,
                             std::uint64_t def) {
    if (!j.contains(key)) return def;
    const auto& v = j.at(key);
    if (!v.is_number_unsigned() && !v.is_number_integer())
        throw ConfigError("config: " + ctx + key + " must be a non-negative integer");
    if (v.is_number_integer() && v.get<std::int64_t>() < 0)
        throw ConfigError("config: " + ctx + key + " must be a non-negative integer");
    return v.get<std::uint64_t>();
}

inline std::vector<int> get_int_list(const json& j, const std::string& ctx, const char* key) {
    std::vector<int> out;
    if (!j.contains(key)) return out;
    const auto& v = j.at(key);
    if (!v.is_array()) throw ConfigError("config: " + ctx + key + " must be an array");
    for (const auto& e : v) {
        if (!e.is_number_integer())
            throw ConfigError("config: " + ctx + key + " entries must be integers");
        out.push_back(e.get<int>());
    }
    return out;
}

inline LinkClassParams parse_link_class(const json& j, const std::string& ctx,
                                        LinkClassParams def) {
    expect_object(j, ctx);
    reject_unknown(j, ctx + ".", {"pathloss_intercept_db", "pathloss_exponent",
                                  "shadowing_sigma_db", "nlos_extra_loss_db"});
    LinkClassParams p;
    p.pathloss_intercept_db =
        get_double(j, ctx + ".", "pathloss_intercept_db", def.pathloss_intercept_db);
    p.pathloss_exponent = get_double(j, ctx + ".", "pathloss_exponent", def.pathloss_exponent);
    p.shadowing_sigma_db =
        get_double(j, ctx + ".", "shadowing_sigma_db", def.shadowing_sigma_db);
    p.nlos_extra_loss_db =
        get_double(j, ctx + ".", "nlos_extra_loss_db", def.nlos_extra_loss_db);
    return p;
}

}  // namespace detail

inline ExperimentConfig parse_config(const nlohmann::json& root) {
    using detail::get_double;
    using detail::get_int;
    using detail::get_int_list;
    using detail::get_u64;
    detail::expect_object(root, "root");
    detail::reject_unknown(root, "",
                           {"scenario", "channel", "qos", "mc", "gamma_t_db", "schemes",
                            "num_drops", "num_fading", "seed", "output_dir", "phi"});
    ExperimentConfig cfg;

    if (root.contains("scenario")) {
        const auto& j = root.at("scenario");
        detail::expect_object(j, "scenario");
        detail::reject_unknown(
            j, "scenario.",
            {"region_side_m", "building_side_m", "enb_height_m", "ue_height_m",
             "num_subbands", "num_cues", "num_vue_pairs", "cue_rbs", "vue_rbs",
             "v2v_distance_m", "cue_max_power_dbm", "vue_max_power_dbm", "noise_dbm",
             "time_unit_ms", "rrm_period_ms"});
        Scenario& s = cfg.scenario;
        s.region_side_m = get_double(j, "scenario.", "region_side_m", s.region_side_m);
        s.building_side_m = get_double(j, "scenario.", "building_side_m", s.building_side_m);
        s.enb_height_m = get_double(j, "scenario.", "enb_height_m", s.enb_height_m);
        s.ue_height_m = get_double(j, "scenario.", "ue_height_m", s.ue_height_m);
        s.num_subbands = get_int(j, "scenario.", "num_subbands", s.num_subbands);
        s.num_cues = get_int(j, "scenario.", "num_cues", s.num_cues);
        s.num_vue_pairs = get_int(j, "scenario.", "num_vue_pairs", s.num_vue_pairs);
        s.cue_rbs = get_int_list(j, "scenario.", "cue_rbs");
        s.vue_rbs = get_int_list(j, "scenario.", "vue_rbs");
        s.v2v_distance_m = get_double(j, "scenario.", "v2v_distance_m", s.v2v_distance_m);
        s.cue_max_power_dbm =
            get_double(j, "scenario.", "cue_max_power_dbm", s.cue_max_power_dbm);
        s.vue_max_power_dbm =
            get_double(j, "scenario.", "vue_max_power_dbm", s.vue_max_power_dbm);
        s.noise_dbm = get_double(j, "scenario.", "noise_dbm", s.noise_dbm);
        s.time_unit_ms = get_double(j, "scenario.", "time_unit_ms", s.time_unit_ms);
        s.rrm_period_ms = get_double(j, "scenario.", "rrm_period_ms", s.rrm_period_ms);
    }
    if (root.contains("channel")) {
        const auto& j = root.at("channel");
        detail::expect_object(j, "channel");
        detail::reject_unknown(j, "channel.", {"ue_enb", "ue_ue"});
        if (j.contains("ue_enb"))
            cfg.channel.ue_enb =
                detail::parse_link_class(j.at("ue_enb"), "channel.ue_enb", cfg.channel.ue_enb);
        if (j.contains("ue_ue"))
            cfg.channel.ue_ue =
                detail::parse_link_class(j.at("ue_ue"), "channel.ue_ue", cfg.channel.ue_ue);
    }
    if (root.contains("qos")) {
        const auto& j = root.at("qos");
        detail::expect_object(j, "qos");
        detail::reject_unknown(j, "qos.",
                               {"payload_bits", "max_outage", "latency_units",
                                "symbols_per_rb", "rbs_per_message", "rbs_per_unit"});
        VueQos& q = cfg.qos;
        q.payload_bits = get_int(j, "qos.", "payload_bits", q.payload_bits);
        q.max_outage = get_double(j, "qos.", "max_outage", q.max_outage);
        q.latency_units = get_int(j, "qos.", "latency_units", q.latency_units);
        q.symbols_per_rb = get_int(j, "qos.", "symbols_per_rb", q.symbols_per_rb);
        q.rbs_per_message = get_int(j, "qos.", "rbs_per_message", q.rbs_per_message);
        q.rbs_per_unit = get_int(j, "qos.", "rbs_per_unit", q.rbs_per_unit);
    }
    if (root.contains("mc")) {
        const auto& j = root.at("mc");
        detail::expect_object(j, "mc");
        detail::reject_unknown(
            j, "mc.", {"num_samples", "seed", "bracket_lo_db", "bracket_hi_db", "tol_db"});
        McConfig& m = cfg.mc;
        const double n = get_double(j, "mc.", "num_samples",
                                    static_cast<double>(m.num_samples));
        if (n < 0.0 || n != std::floor(n))
            throw ConfigError("config: mc.num_samples must be a non-negative integer");
        m.num_samples = static_cast<std::int64_t>(n);
        m.seed = get_u64(j, "mc.", "seed", m.seed);
        m.bracket_lo_db = get_double(j, "mc.", "bracket_lo_db", m.bracket_lo_db);
        m.bracket_hi_db = get_double(j, "mc.", "bracket_hi_db", m.bracket_hi_db);
        m.tol_db = get_double(j, "mc.", "tol_db", m.tol_db);
    }
    if (root.contains("gamma_t_db")) {
        if (!root.at("gamma_t_db").is_number())
            throw ConfigError("config: gamma_t_db must be a number");
        cfg.gamma_t_db = root.at("gamma_t_db").get<double>();
    }
    if (root.contains("schemes")) {
        const auto& j = root.at("schemes");
        if (!j.is_array()) throw ConfigError("config: schemes must be an array of strings");
        cfg.schemes.clear();
        for (const auto& e : j) {
            if (!e.is_string()) throw ConfigError("config: schemes entries must be strings");
            cfg.schemes.push_back(e.get<std::string>());
        }
    }
    cfg.num_drops = get_int(root, "", "num_drops", cfg.num_drops);
    cfg.num_fading = get_int(root, "", "num_fading", cfg.num_fading);
    cfg.seed = get_u64(root, "", "seed", cfg.seed);
    if (root.contains("output_dir")) {
        if (!root.at("output_dir").is_string())
            throw ConfigError("config: output_dir must be a string");
        cfg.output_dir = root.at("output_dir").get<std::string>();
    }
    cfg.phi = get_double(root, "", "phi", cfg.phi);

    // empty RB lists mean an even split for C-UEs and the per-unit QoS
    // requirement for every V-UE
    if (cfg.scenario.cue_rbs.empty()) {
        if (cfg.scenario.num_cues > 0 &&
            cfg.scenario.num_subbands % cfg.scenario.num_cues != 0)
            throw ConfigError(
                "config: scenario.cue_rbs omitted but num_subbands is not divisible by "
                "num_cues");
        cfg.scenario.cue_rbs.assign(cfg.scenario.num_cues,
                                    cfg.scenario.num_subbands / cfg.scenario.num_cues);
    }
    if (cfg.scenario.vue_rbs.empty())
        cfg.scenario.vue_rbs.assign(cfg.scenario.num_vue_pairs, cfg.qos.rbs_per_unit);

    cfg.scenario.seed = cfg.seed;
    cfg.validate();
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config: JSON parse failure in '" + path + "': " + e.what());
    }
    return parse_config(j);
}

}  // namespace d2d
