#pragma once

#include "slicewave/channel.hpp"
#include "slicewave/config.hpp"
#include "slicewave/dsp.hpp"
#include "slicewave/metrics.hpp"
#include "slicewave/slicer.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace slicewave {

// Transmit-side artifacts shared by every sweep point: the shaped source,
// pilot frames for both tributaries, the slice-locked recombined field after
// split-and-delay, and the references metrics need later.
struct TxSignal {
    ShapingDistribution source;
    SliceSpec spec;
    PilotFrame frame_x, frame_y;
    std::vector<std::uint32_t> indices_x, indices_y;  // per data symbol, strip order
    CVec ref_x, ref_y;                                // transmitted data points, strip order
    DualPolWaveform field;
    SceState sce;  // lock diagnostics
};

TxSignal build_tx(const ExperimentConfig& cfg);

struct PointResult {
    std::string label;
    RateReport report;
    bool converged = false;
    // Waveform-level stitch fidelity before any DSP; NaN unless the scenario
    // is stitch_test with a zero LO offset.
    double raw_stitch_evm_db = std::numeric_limits<double>::quiet_NaN();
    std::vector<LoopTelemetry> telemetry;
    CVec scatter_x, scatter_y;  // equalized data symbols, capped for dumps
};

struct RunResult {
    Scenario scenario = Scenario::b2b_sweep;
    std::string hash;
    std::vector<PointResult> points;
};

// Receive one captured field: slice capture with a common LO offset snapped
// to the record grid, overlap phase estimation, stitch, demodulate, score.
PointResult measure_point(const ExperimentConfig& cfg, const TxSignal& tx,
                          const DualPolWaveform& field, double distance_km, double osnr_db,
                          std::uint64_t point_seed, const std::string& label);

// Run the configured scenario. Points run on a worker pool sized by
// SLICEWAVE_THREADS (hardware concurrency when unset); per-point seeds come
// from (cfg.seed, point index) so outputs do not depend on the pool size.
// The calibrate_tx scenario goes through calibrate_tx_floor instead.
RunResult run_experiment(const ExperimentConfig& cfg);

struct CalibrationResult {
    double fitted_floor_snr_db = 0.0;
    double measured_snr_db = 0.0;
    double ceiling_snr_db = 0.0;  // chain SNR with the floor disabled
    int evaluations = 0;
};

// Bisect the transmitter noise floor until the back-to-back chain SNR meets
// cfg.calibrate_target_db within 0.02 dB. Throws when the clean chain cannot
// even reach the target.
CalibrationResult calibrate_tx_floor(const ExperimentConfig& cfg);

// results.csv (every row carries the config hash), results.json,
// constellation_<label>.csv dumps, telemetry.csv on loop runs, manifest.json.
// Byte-identical for identical (config, seed).
void write_run_outputs(const RunResult& r, const ExperimentConfig& cfg,
                       const std::string& out_dir);

void write_calibration_outputs(const CalibrationResult& r, const ExperimentConfig& cfg,
                               const std::string& out_dir);

// Digest a run directory into plot-ready tables: rate_vs_distance.csv,
// snr_vs_osnr.csv, scatter_<label>.csv, summary.txt. Throws when the
// directory holds no results.json.
void write_report(const std::string& results_dir, const std::string& out_dir);

// Condensed invariant sweep, one PASS/FAIL line per check on out.
bool selftest(std::ostream& out);

}  // namespace slicewave
