#include "slicewave/pipeline.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace slicewave;
namespace fs = std::filesystem;

namespace {

ExperimentConfig cfg_from(const std::string& text) {
    return config_from_toml(parse_toml(text));
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path fresh_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / "slicewave_test_pipeline" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("tx build: frames, references, lock, determinism") {
    ExperimentConfig cfg = cfg_from("scenario = \"stitch_test\"\nseed = 5\n");
    TxSignal tx = build_tx(cfg);

    CHECK(tx.frame_x.symbols.size() == cfg.frame_symbols);
    const std::size_t n_data = data_length_for_frame(cfg.frame_symbols, cfg.pilot_rate);
    CHECK(tx.indices_x.size() == n_data);
    CHECK(tx.indices_y.size() == n_data);
    CHECK(tx.ref_x.size() == n_data);

    // The y tributary index map must reproduce the delayed frame's data.
    CVec mapped = points_of(tx.source, tx.indices_y);
    REQUIRE(mapped.size() == tx.ref_y.size());
    for (std::size_t i = 0; i < mapped.size(); ++i)
        CHECK(std::abs(mapped[i] - tx.ref_y[i]) < 1e-12);

    CHECK(tx.spec.crossover() == doctest::Approx(cfg.carrier_freq()));
    CHECK(tx.spec.fsr() == doctest::Approx(cfg.slice_fsr));
    CHECK(tx.sce.locked);
    CHECK(std::abs(tx.sce.error_signal) <= tx.sce.tolerance);

    CHECK(tx.field.size() == cfg.frame_symbols * static_cast<std::size_t>(cfg.shaping_sps));
    CHECK(tx.field.x.mean_power() == doctest::Approx(1.0).epsilon(0.05));
    CHECK(tx.field.y.mean_power() == doctest::Approx(tx.field.x.mean_power()).epsilon(1e-9));

    TxSignal again = build_tx(cfg);
    CHECK(again.field.x.samples == tx.field.x.samples);
    CHECK(again.field.y.samples == tx.field.y.samples);
}

TEST_CASE("stitch scenario: clean chain round trip") {
    ExperimentConfig cfg = cfg_from(
        "scenario = \"stitch_test\"\n"
        "seed = 11\n"
        "rx.lo_offset = 0\n");
    RunResult res = run_experiment(cfg);
    REQUIRE(res.points.size() == 1);
    const PointResult& p = res.points[0];

    CHECK(p.label == "stitch");
    CHECK(p.converged);
    // Waveform fidelity of the slice-lock-stitch loop, before any DSP.
    CHECK(p.raw_stitch_evm_db < -35.0);
    // Symbol fidelity of the whole chain with no noise anywhere.
    CHECK(p.report.snr_db > 28.0);
    CHECK(p.report.gmi > 3.75);
    CHECK(p.report.ngmi > 0.99);
    REQUIRE(p.report.selected_rc.has_value());
    CHECK(*p.report.selected_rc == doctest::Approx(0.9));
    CHECK(p.report.net_bps ==
          doctest::Approx(net_bit_rate(300e9, cfg.pilot_rate, p.report.entropy, 0.9, 4)));
    CHECK(p.scatter_x.size() == 4096);
}

TEST_CASE("b2b sweep: monotonic, thread-count invariant, outputs") {
    const char* text =
        "scenario = \"b2b_sweep\"\n"
        "seed = 7\n"
        "sweep.osnr_db = [12, 18, 30]\n";
    ExperimentConfig cfg = cfg_from(text);

    setenv("SLICEWAVE_THREADS", "1", 1);
    RunResult serial = run_experiment(cfg);
    setenv("SLICEWAVE_THREADS", "3", 1);
    RunResult pooled = run_experiment(cfg);
    unsetenv("SLICEWAVE_THREADS");

    REQUIRE(serial.points.size() == 3);
    REQUIRE(pooled.points.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        // Per-point seeds hang off the point index, so the pool size must not
        // move a single bit.
        CHECK(serial.points[i].report.snr_db == pooled.points[i].report.snr_db);
        CHECK(serial.points[i].report.gmi == pooled.points[i].report.gmi);
        CHECK(serial.points[i].scatter_x == pooled.points[i].scatter_x);
    }

    CHECK(serial.points[0].report.snr_db < serial.points[1].report.snr_db);
    CHECK(serial.points[1].report.snr_db < serial.points[2].report.snr_db);
    CHECK(serial.points[0].report.gmi < serial.points[1].report.gmi);
    CHECK(serial.points[1].report.gmi < serial.points[2].report.gmi);
    // Loaded OSNR equals SNR at the desk rate; the chain only loses on top.
    CHECK(serial.points[0].report.snr_db < 12.0);
    CHECK(serial.points[0].report.snr_db > 10.0);

    fs::path out = fresh_dir("b2b_out");
    write_run_outputs(serial, cfg, out.string());
    CHECK(fs::exists(out / "results.csv"));
    CHECK(fs::exists(out / "results.json"));
    CHECK(fs::exists(out / "manifest.json"));
    CHECK(fs::exists(out / "constellation_osnr_12.csv"));
    CHECK(fs::exists(out / "constellation_osnr_30.csv"));

    std::string csv = slurp(out / "results.csv");
    std::istringstream lines(csv);
    std::string header, row;
    std::getline(lines, header);
    CHECK(header == rate_report_csv_header() + ",config_hash");
    std::size_t rows = 0;
    while (std::getline(lines, row)) {
        ++rows;
        CHECK(row.find(serial.hash) != std::string::npos);
    }
    CHECK(rows == 3);

    // Byte-identical on rewrite.
    std::string json_once = slurp(out / "results.json");
    write_run_outputs(serial, cfg, out.string());
    CHECK(slurp(out / "results.json") == json_once);
    CHECK(config_hash(cfg) == serial.hash);

    fs::path rpt = fresh_dir("b2b_rpt");
    write_report(out.string(), rpt.string());
    CHECK(fs::exists(rpt / "rate_vs_distance.csv"));
    CHECK(fs::exists(rpt / "summary.txt"));
    CHECK(fs::exists(rpt / "scatter_osnr_12.csv"));
    std::string snr_table = slurp(rpt / "snr_vs_osnr.csv");
    CHECK(snr_table.find("osnr_db,snr_db,ideal_snr_db,implementation_gap_db") == 0);
    std::size_t snr_rows = 0;
    for (char c : snr_table)
        if (c == '\n') ++snr_rows;
    CHECK(snr_rows == 4);

    fs::path empty = fresh_dir("empty");
    CHECK_THROWS_WITH_AS(write_report(empty.string(), rpt.string()),
                         doctest::Contains("no results"), std::runtime_error);
}

TEST_CASE("transmission sweep: distance, telemetry, decline") {
    ExperimentConfig cfg = cfg_from(
        "scenario = \"transmission_sweep\"\n"
        "seed = 3\n"
        "sweep.loop_counts = [0, 2]\n");
    RunResult res = run_experiment(cfg);
    REQUIRE(res.points.size() == 2);

    CHECK(res.points[0].report.distance_km == 0.0);
    CHECK(res.points[1].report.distance_km == doctest::Approx(2 * 11 * 55.0));
    CHECK(res.points[0].telemetry.empty());
    REQUIRE(res.points[1].telemetry.size() == 2);
    CHECK(res.points[1].telemetry.back().distance_km == doctest::Approx(1210.0));
    CHECK(res.points[1].telemetry.back().guard_ok);
    CHECK(std::isinf(res.points[0].report.osnr_db));
    CHECK(res.points[1].report.osnr_db ==
          doctest::Approx(res.points[1].telemetry.back().osnr_db));

    // 1210 km of uncompensated dispersion must come back through the CDC.
    CHECK(res.points[0].converged);
    CHECK(res.points[1].converged);
    CHECK(res.points[1].report.snr_db > 20.0);
    CHECK(res.points[1].report.ngmi <= res.points[0].report.ngmi);

    fs::path out = fresh_dir("trans_out");
    write_run_outputs(res, cfg, out.string());
    std::string telem = slurp(out / "telemetry.csv");
    CHECK(telem.find(loop_telemetry_csv_header()) == 0);
    std::size_t telem_rows = 0;
    for (char c : telem)
        if (c == '\n') ++telem_rows;
    CHECK(telem_rows == 3);
}

TEST_CASE("tx floor calibration hits the target") {
    ExperimentConfig cfg = cfg_from(
        "scenario = \"calibrate_tx\"\n"
        "seed = 19\n"
        "calibrate.target_floor_db = 15.0\n"
        "dsp.mimo_step = 5e-4\n"
        "dsp.wl_taps = 0\n");
    CalibrationResult cal = calibrate_tx_floor(cfg);

    CHECK(cal.ceiling_snr_db > 20.0);
    CHECK(std::abs(cal.measured_snr_db - 15.0) < 0.05);
    // The fitted floor sits above the target by exactly the chain penalty.
    CHECK(cal.fitted_floor_snr_db > 15.0);
    CHECK(cal.fitted_floor_snr_db < 18.0);

    CalibrationResult again = calibrate_tx_floor(cfg);
    CHECK(again.fitted_floor_snr_db == cal.fitted_floor_snr_db);
    CHECK(again.evaluations == cal.evaluations);

    fs::path out = fresh_dir("cal_out");
    write_calibration_outputs(cal, cfg, out.string());
    std::string j = slurp(out / "calibration.json");
    CHECK(j.find("fitted_floor_snr_db") != std::string::npos);
    CHECK(j.find(config_hash(cfg)) != std::string::npos);

    // run_experiment refuses this scenario; calibration has its own entry.
    CHECK_THROWS(run_experiment(cfg));
}

TEST_CASE("selftest sweeps green") {
    std::ostringstream out;
    CHECK(selftest(out));
    std::string s = out.str();
    CHECK(s.find("FAIL") == std::string::npos);
    std::size_t passes = 0;
    for (std::size_t pos = s.find("PASS"); pos != std::string::npos;
         pos = s.find("PASS", pos + 1))
        ++passes;
    CHECK(passes == 7);
}
