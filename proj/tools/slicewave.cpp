#include "slicewave/pipeline.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

using namespace slicewave;

namespace {

struct RunOpts {
    std::string config_path;
    std::string out_dir = "out";
    std::vector<std::string> sets;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = 0;
};

// Config file, then --set overrides, then --seed, then a forced scenario.
ExperimentConfig load_config(const RunOpts& o, const char* force_scenario) {
    TomlTable t = o.config_path.empty() ? TomlTable{} : parse_toml_file(o.config_path);
    for (const std::string& s : o.sets) apply_override(t, s);
    if (o.seed_set) apply_override(t, "seed=" + std::to_string(o.seed));
    if (force_scenario) apply_override(t, std::string("scenario=\"") + force_scenario + "\"");
    return config_from_toml(t);
}

void add_config_options(CLI::App* cmd, RunOpts& o, bool& seed_seen) {
    cmd->add_option("-c,--config", o.config_path, "TOML config file")
        ->check(CLI::ExistingFile);
    cmd->add_option("--out", o.out_dir, "output directory (default: out)");
    cmd->add_option("--set", o.sets, "config override, key=value (repeatable)");
    cmd->add_option("--seed", o.seed, "override the run seed")
        ->each([&seed_seen](const std::string&) { seed_seen = true; });
    cmd->add_option("--threads", o.threads, "worker pool size (default: SLICEWAVE_THREADS or all cores)")
        ->check(CLI::PositiveNumber);
}

void print_points(const RunResult& r) {
    for (const PointResult& p : r.points) {
        std::printf("%-12s snr %6.2f dB  gmi %5.3f  ngmi %6.4f  air %7.4f Tb/s  net %7.4f Tb/s%s\n",
                    p.label.c_str(), p.report.snr_db, p.report.gmi, p.report.ngmi,
                    p.report.air_bps / 1e12, p.report.net_bps / 1e12,
                    p.converged ? "" : "  [equalizer not converged]");
        if (std::isfinite(p.raw_stitch_evm_db))
            std::printf("%-12s raw stitch EVM %.2f dB\n", "", p.raw_stitch_evm_db);
    }
}

int do_run(const RunOpts& o, const char* force_scenario) {
    ExperimentConfig cfg;
    try {
        cfg = load_config(o, force_scenario);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    }
    if (o.threads > 0) setenv("SLICEWAVE_THREADS", std::to_string(o.threads).c_str(), 1);

    try {
        if (cfg.scenario == Scenario::calibrate_tx) {
            CalibrationResult cal = calibrate_tx_floor(cfg);
            write_calibration_outputs(cal, cfg, o.out_dir);
            std::printf("target floor   %.2f dB\n", cfg.calibrate_target_db);
            std::printf("fitted floor   %.4f dB\n", cal.fitted_floor_snr_db);
            std::printf("measured snr   %.4f dB\n", cal.measured_snr_db);
            std::printf("chain ceiling  %.2f dB\n", cal.ceiling_snr_db);
            std::printf("evaluations    %d\n", cal.evaluations);
        } else {
            RunResult r = run_experiment(cfg);
            std::printf("scenario %s  seed %llu  config %s\n", to_string(cfg.scenario).c_str(),
                        static_cast<unsigned long long>(cfg.seed), r.hash.c_str());
            print_points(r);
            write_run_outputs(r, cfg, o.out_dir);
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    std::printf("wrote %s\n", o.out_dir.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"two-slice coherent transmission simulator"};
    app.require_subcommand(1);

    RunOpts run_opts;
    bool run_seed_seen = false;
    CLI::App* run_cmd = app.add_subcommand("run", "run the configured scenario");
    add_config_options(run_cmd, run_opts, run_seed_seen);

    RunOpts cal_opts;
    bool cal_seed_seen = false;
    CLI::App* cal_cmd =
        app.add_subcommand("calibrate-tx", "fit the tx noise floor to the configured target");
    add_config_options(cal_cmd, cal_opts, cal_seed_seen);

    std::string report_in, report_out;
    CLI::App* report_cmd =
        app.add_subcommand("report", "digest a run directory into plot-ready tables");
    report_cmd->add_option("dir", report_in, "run output directory")->required();
    report_cmd->add_option("--out", report_out, "report directory (default: <dir>/report)");

    CLI::App* self_cmd = app.add_subcommand("selftest", "condensed invariant sweep");

    CLI11_PARSE(app, argc, argv);

    if (*run_cmd) {
        run_opts.seed_set = run_seed_seen;
        return do_run(run_opts, nullptr);
    }
    if (*cal_cmd) {
        cal_opts.seed_set = cal_seed_seen;
        return do_run(cal_opts, "calibrate_tx");
    }
    if (*report_cmd) {
        try {
            if (report_out.empty()) report_out = report_in + "/report";
            write_report(report_in, report_out);
            std::printf("wrote %s\n", report_out.c_str());
        } catch (const std::exception& e) {
            std::fprintf(stderr, "error: %s\n", e.what());
            return 1;
        }
        return 0;
    }
    if (*self_cmd) return selftest(std::cout) ? 0 : 1;
    return 0;
}
