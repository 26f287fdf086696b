#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "d2d/runner.hpp"

namespace {

struct CommonFlags {
    std::string config_path;
    std::vector<std::string> schemes;
    int drops = -1;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string out_dir;
    int workers = 1;
    bool dump_matching = false;
    bool trace_power = false;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool config_required) {
    auto* c = cmd->add_option("--config", f.config_path, "experiment config JSON");
    if (config_required) c->required();
    cmd->add_option("--scheme", f.schemes, "schemes to run (repeatable)")
        ->check(CLI::IsMember({"srbp", "zulhasnine", "feng", "optimal"}));
    cmd->add_option("--drops", f.drops, "number of drops")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", f.seed, "master seed")->each([&f](const std::string&) {
        f.seed_set = true;
    });
    cmd->add_option("--out", f.out_dir, "output directory for CSV files");
    cmd->add_option("--workers", f.workers, "worker threads over drops")
        ->check(CLI::PositiveNumber);
    cmd->add_flag("--dump-matching", f.dump_matching, "write matchings.csv per drop");
    cmd->add_flag("--trace-power", f.trace_power, "write power_trace.csv per drop");
}

d2d::ExperimentConfig load_with_overrides(const CommonFlags& f) {
    d2d::ExperimentConfig cfg =
        f.config_path.empty() ? d2d::ExperimentConfig{} : d2d::load_config(f.config_path);
    if (f.config_path.empty()) {
        // defaults need RB lists filled the same way the parser does
        cfg.scenario.cue_rbs.assign(cfg.scenario.num_cues,
                                    cfg.scenario.num_subbands / cfg.scenario.num_cues);
        cfg.scenario.vue_rbs.assign(cfg.scenario.num_vue_pairs, cfg.qos.rbs_per_unit);
    }
    if (!f.schemes.empty()) cfg.schemes = f.schemes;
    if (f.drops > 0) cfg.num_drops = f.drops;
    if (f.seed_set) cfg.seed = f.seed;
    if (!f.out_dir.empty()) cfg.output_dir = f.out_dir;
    cfg.scenario.seed = cfg.seed;
    cfg.validate();
    return cfg;
}

int cmd_derive(const CommonFlags& f) {
    const d2d::ExperimentConfig cfg = load_with_overrides(f);
    const d2d::ThresholdResult th = d2d::derive_sinr_threshold(cfg.qos, cfg.mc);
    std::printf("rbs_per_unit,threshold_db,achieved_outage,ci95,bisection_steps\n");
    std::printf("%d,%.4f,%.6g,%.6g,%d\n", cfg.qos.rbs_per_unit, th.threshold_db,
                th.achieved_outage, th.ci95, th.bisection_steps);
    return 0;
}

void print_gamma(const d2d::RunOutput& out) {
    std::printf("gamma_t_db=%.4f (%s)\n", out.gamma_t_db,
                out.threshold_derived ? "derived" : "direct");
}

int cmd_run(const CommonFlags& f) {
    const d2d::ExperimentConfig cfg = load_with_overrides(f);
    d2d::RunOptions opt;
    opt.workers = f.workers;
    opt.dump_matching = f.dump_matching;
    opt.trace_power = f.trace_power;
    const d2d::RunOutput out = d2d::run_experiment(cfg, opt);
    print_gamma(out);
    std::printf("scheme,mean_sumrate,vue_outage,feasibility_rate\n");
    for (const auto& s : out.summaries)
        std::printf("%s,%.6f,%.6g,%.6g\n", s.scheme.c_str(), s.mean_sumrate_slow, s.vue_outage,
                    s.feasibility_rate);
    std::printf("wrote %s/{sumrate_cdf,vue_bits_cdf,summary}.csv\n", cfg.output_dir.c_str());
    return 0;
}

int cmd_compare(const CommonFlags& f) {
    const d2d::ExperimentConfig cfg = load_with_overrides(f);
    d2d::RunOptions opt;
    opt.workers = f.workers;
    opt.dump_matching = f.dump_matching;
    opt.trace_power = f.trace_power;
    opt.write_csv = false;
    const d2d::RunOutput out = d2d::run_experiment(cfg, opt);
    print_gamma(out);

    const int n = cfg.num_drops;
    const auto mean_ci = [n](const std::vector<d2d::DropResult>& drops) {
        double mean = 0.0;
        for (const auto& d : drops) mean += d.sumrate_slow;
        mean /= n;
        double var = 0.0;
        for (const auto& d : drops) var += (d.sumrate_slow - mean) * (d.sumrate_slow - mean);
        var = n > 1 ? var / (n - 1) : 0.0;
        return std::pair<double, double>(mean, 1.96 * std::sqrt(var / n));
    };
    std::printf("scheme,mean_sumrate,ci95,vue_outage,feasibility_rate\n");
    for (std::size_t si = 0; si < out.schemes.size(); ++si) {
        const auto [mean, ci] = mean_ci(out.drops[si]);
        std::printf("%s,%.6f,%.6f,%.6g,%.6g\n", out.schemes[si].c_str(), mean, ci,
                    out.summaries[si].vue_outage, out.summaries[si].feasibility_rate);
    }
    if (out.schemes.size() > 1) {
        std::printf("pair,delta_mean,delta_ci95\n");
        for (std::size_t si = 1; si < out.schemes.size(); ++si) {
            double mean = 0.0;
            for (int d = 0; d < n; ++d)
                mean += out.drops[0][d].sumrate_slow - out.drops[si][d].sumrate_slow;
            mean /= n;
            double var = 0.0;
            for (int d = 0; d < n; ++d) {
                const double x =
                    out.drops[0][d].sumrate_slow - out.drops[si][d].sumrate_slow - mean;
                var += x * x;
            }
            var = n > 1 ? var / (n - 1) : 0.0;
            std::printf("%s-%s,%.6f,%.6f\n", out.schemes[0].c_str(), out.schemes[si].c_str(),
                        mean, 1.96 * std::sqrt(var / n));
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"D2D V2V underlay RRM simulator"};
    app.require_subcommand(1);
    CommonFlags derive_flags, run_flags, compare_flags;
    CLI::App* derive = app.add_subcommand(
        "derive-threshold", "derive the slow-SINR floor from the QoS target by Monte Carlo");
    add_common(derive, derive_flags, false);
    CLI::App* run = app.add_subcommand("run", "run configured schemes and write CSV outputs");
    add_common(run, run_flags, true);
    CLI::App* compare =
        app.add_subcommand("compare", "run configured schemes and print a paired summary");
    add_common(compare, compare_flags, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (derive->parsed()) return cmd_derive(derive_flags);
        if (run->parsed()) return cmd_run(run_flags);
        return cmd_compare(compare_flags);
    } catch (const d2d::ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const d2d::BracketError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const d2d::SizeRefusalError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    } catch (const d2d::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
