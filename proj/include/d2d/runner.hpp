#pragma once

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "d2d/config.hpp"
#include "d2d/evaluation.hpp"

namespace d2d {

struct RunOptions {
    int workers = 1;
    bool dump_matching = false;
    bool trace_power = false;
    bool write_csv = true;
};

struct RunOutput {
    double gamma_t_db = 0.0;
    bool threshold_derived = false;
    std::vector<std::string> schemes;
    std::vector<std::vector<DropResult>> drops;  // [scheme][drop]
    std::vector<SchemeSummary> summaries;        // [scheme]
    std::string matching_csv;  // filled when dump_matching
    std::string trace_csv;     // filled when trace_power
};

namespace detail {

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline SchemeResult run_scheme(const std::string& name, const SubUserMap& sub,
                               const LinkGains& gains, const Scenario& scn, double gamma_lin,
                               double phi, PowerTrace* trace) {
    if (name == "srbp") return run_srbp(sub, gains, scn, gamma_lin, phi, trace);
    if (name == "zulhasnine") return modified_zulhasnine(sub, gains, scn, gamma_lin);
    if (name == "feng") return modified_feng(sub, gains, scn, gamma_lin);
    if (name == "optimal") return exhaustive_optimal(sub, gains, scn, gamma_lin);
    throw ConfigError("config: unknown scheme '" + name + "'");
}

inline constexpr std::uint64_t kSsfSeedTag = 0xFAD5;

}  // namespace detail

inline void write_outputs(const ExperimentConfig& cfg, const RunOutput& out);

// Runs every configured scheme over shared drops. Drop d uses the same
// positions, slow gains, and fading grid for every scheme, so differences
// between schemes are paired. Output is independent of the worker count.
inline RunOutput run_experiment(const ExperimentConfig& cfg, const RunOptions& opt) {
    cfg.validate();
    RunOutput out;
    out.schemes = cfg.schemes;

    double gamma_lin;
    if (cfg.has_direct_threshold()) {
        out.gamma_t_db = cfg.gamma_t_db;
        gamma_lin = db_to_linear(cfg.gamma_t_db);
    } else {
        const ThresholdResult th = derive_sinr_threshold(cfg.qos, cfg.mc);
        out.gamma_t_db = th.threshold_db;
        out.threshold_derived = true;
        gamma_lin = th.threshold_lin;
    }

    const SubUserMap sub = expand_subusers(cfg.scenario);
    const int num_schemes = static_cast<int>(cfg.schemes.size());
    out.drops.assign(num_schemes, std::vector<DropResult>(cfg.num_drops));
    std::vector<std::string> matching_parts(opt.dump_matching ? cfg.num_drops : 0);
    std::vector<std::string> trace_parts(opt.trace_power ? cfg.num_drops : 0);

    const auto run_drop = [&](int d) {
        const auto [pos, gains] = generate_drop(cfg.scenario, cfg.channel, d);
        (void)pos;
        const std::uint64_t ssf_seed =
            rng::stream_key(rng::stream_key(cfg.seed, detail::kSsfSeedTag),
                            static_cast<std::uint64_t>(d));
        for (int si = 0; si < num_schemes; ++si) {
            PowerTrace trace;
            PowerTrace* trace_ptr =
                (opt.trace_power && cfg.schemes[si] == "srbp") ? &trace : nullptr;
            const SchemeResult r =
                detail::run_scheme(cfg.schemes[si], sub, gains, cfg.scenario, gamma_lin,
                                   cfg.phi, trace_ptr);
            DropResult dr = simulate_ssf(r.assignment, r.power, gains, sub, cfg.qos,
                                         cfg.num_fading, ssf_seed);
            dr.scheme = cfg.schemes[si];
            dr.drop_index = d;
            out.drops[si][d] = std::move(dr);

            if (opt.dump_matching) {
                std::string& p = matching_parts[d];
                for (int m = 0; m < sub.size(); ++m) {
                    const int k = r.assignment.pair[m];
                    p += cfg.schemes[si];
                    p += ',';
                    p += std::to_string(d);
                    p += ',';
                    p += std::to_string(r.assignment.rb_of_pair[m]);
                    p += ',';
                    p += std::to_string(sub.mhat[m]);
                    p += ',';
                    p += std::to_string(sub.is_dummy(k) ? -1 : sub.khat[k]);
                    p += '\n';
                }
            }
            if (trace_ptr) {
                std::string& p = trace_parts[d];
                for (const auto& e : trace) {
                    p += cfg.schemes[si];
                    p += ',';
                    p += std::to_string(d);
                    p += ',';
                    p += std::to_string(e.iteration);
                    p += ',';
                    p += detail::fmt_double(e.objective_bits);
                    p += ',';
                    p += detail::fmt_double(e.step);
                    p += ',';
                    p += detail::fmt_double(e.kkt_residual);
                    p += '\n';
                }
            }
        }
    };

    const int workers = std::max(1, opt.workers);
    if (workers == 1 || cfg.num_drops == 1) {
        for (int d = 0; d < cfg.num_drops; ++d) run_drop(d);
    } else {
        std::atomic<int> next{0};
        std::atomic<bool> stop{false};
        std::mutex err_mtx;
        std::exception_ptr first_err;
        const auto body = [&] {
            for (;;) {
                const int d = next.fetch_add(1);
                if (d >= cfg.num_drops || stop.load()) break;
                try {
                    run_drop(d);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(err_mtx);
                    if (!first_err) first_err = std::current_exception();
                    stop.store(true);
                    break;
                }
            }
        };
        std::vector<std::thread> pool;
        const int n = std::min(workers, cfg.num_drops);
        pool.reserve(n);
        for (int i = 0; i < n; ++i) pool.emplace_back(body);
        for (auto& t : pool) t.join();
        if (first_err) std::rethrow_exception(first_err);
    }

    for (int si = 0; si < num_schemes; ++si)
        out.summaries.push_back(aggregate(cfg.schemes[si], out.drops[si], cfg.qos));

    if (opt.dump_matching) {
        out.matching_csv = "scheme,drop,rb,cue,vue\n";
        for (const auto& p : matching_parts) out.matching_csv += p;
    }
    if (opt.trace_power) {
        out.trace_csv = "scheme,drop,iteration,objective_bits,step,kkt_residual\n";
        for (const auto& p : trace_parts) out.trace_csv += p;
    }

    if (opt.write_csv) write_outputs(cfg, out);
    return out;
}

inline void write_outputs(const ExperimentConfig& cfg, const RunOutput& out) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.output_dir);
    const auto open = [&](const char* name) {
        std::ofstream f(fs::path(cfg.output_dir) / name, std::ios::binary);
        if (!f) throw ConfigError("config: cannot write to output_dir '" + cfg.output_dir + "'");
        return f;
    };
    {
        auto f = open("sumrate_cdf.csv");
        f << "scheme,sample\n";
        for (const auto& s : out.summaries)
            for (double v : s.sumrate_samples)
                f << s.scheme << ',' << detail::fmt_double(v) << '\n';
    }
    {
        auto f = open("vue_bits_cdf.csv");
        f << "scheme,vue,sample\n";
        for (const auto& s : out.summaries)
            for (std::size_t kv = 0; kv < s.vue_bits.size(); ++kv)
                for (double v : s.vue_bits[kv])
                    f << s.scheme << ',' << kv << ',' << detail::fmt_double(v) << '\n';
    }
    {
        auto f = open("summary.csv");
        f << "scheme,mean_sumrate,vue_outage,feasibility_rate\n";
        for (const auto& s : out.summaries)
            f << s.scheme << ',' << detail::fmt_double(s.mean_sumrate_slow) << ','
              << detail::fmt_double(s.vue_outage) << ','
              << detail::fmt_double(s.feasibility_rate) << '\n';
    }
    if (!out.matching_csv.empty()) {
        auto f = open("matchings.csv");
        f << out.matching_csv;
    }
    if (!out.trace_csv.empty()) {
        auto f = open("power_trace.csv");
        f << out.trace_csv;
    }
}

}  // namespace d2d
