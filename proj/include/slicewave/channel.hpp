#pragma once

#include "slicewave/sigcore.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace slicewave {

// Single-span fiber description. Dispersion numbers are quoted at the
// reference wavelength; gamma() folds n2 and Aeff into SI units.
struct FiberParams {
    double length_km = 55.0;
    double alpha_db_per_km = 0.157;
    double dispersion_ps_nm_km = 20.5;
    double slope_ps_nm2_km = 0.06;
    double effective_area_um2 = 150.0;
    double n2_m2_per_w = 2.2e-20;
    double reference_wavelength_nm = 1550.0;

    double beta2() const;  // s^2/m, negative for anomalous dispersion
    double beta3() const;  // s^3/m
    double gamma() const;  // 1/(W m)
    double span_loss_db() const { return alpha_db_per_km * length_km; }
    void validate() const;
};

// Line amplifier. output_power_dbm is the total comb power target across
// both polarizations; gain is whatever closes the gap. ASE is added with
// PSD (G-1) h nu NF/2 per polarization over the whole simulation band.
struct EdfaParams {
    double output_power_dbm = 17.0;
    double noise_figure_db = 5.0;  // quantum limit 3.01 dB enforced below

    void validate() const;
};

// Channel plan for the comb: channel under test at cut_index, dummies on
// every other index, uniform spacing.
struct WdmConfig {
    double spacing_hz = 306.25e9;
    int n_dummies = 10;
    double dummy_bandwidth_hz = 300e9;
    int cut_index = -1;  // -1 centers the CUT: n_dummies / 2

    int channel_count() const { return n_dummies + 1; }
    int cut() const { return cut_index >= 0 ? cut_index : n_dummies / 2; }
    // Channel center offset from the CUT carrier for comb index i.
    double offset(int i) const { return (i - cut()) * spacing_hz; }
    void validate() const;
};

// One recirculating-loop round trip: spans_per_loop spans each followed by
// an EDFA, then ideal gain flattening, per-channel comb power equalization,
// and a loop-synchronous polarization scramble. scrambler_seed is also the
// master seed for all loop ASE draws.
struct LoopConfig {
    int spans_per_loop = 11;
    FiberParams fiber{};
    EdfaParams edfa{};
    WdmConfig wdm{};
    std::uint64_t scrambler_seed = 1;
    bool gff = true;
    bool comb_equalization = true;
    double ssfm_step_km = 0.0;  // 0 runs spans linearly, > 0 enables Kerr SSFM

    double loop_length_km() const { return spans_per_loop * fiber.length_km; }
    void validate() const;
};

// Surround the CUT with band-limited complex Gaussian dummy channels, each
// matched to the CUT's per-polarization power. Throws when a dummy band
// falls outside the simulation bandwidth.
DualPolWaveform add_dummies(const DualPolWaveform& cut, const WdmConfig& cfg,
                            std::uint64_t seed);

// Worst-case group-delay spread across the grid bandwidth after length_km.
double group_delay_spread(const FiberParams& p, double bandwidth_hz, double length_km);

// One span of fiber: dispersive all-pass phase plus loss, with an optional
// symmetric split-step Manakov Kerr term (8/9 polarization averaging).
// guard_ok, when given, reports whether the dispersion spread still fits
// the cyclic record.
DualPolWaveform span_propagate(const DualPolWaveform& field, const FiberParams& p,
                               double ssfm_step_km = 0.0, bool* guard_ok = nullptr);

// Amplify to the EDFA's total output power target and add ASE. Gain below
// unity adds nothing.
DualPolWaveform amplify(const DualPolWaveform& field, const EdfaParams& e,
                        std::uint64_t seed);

// Haar-random 2x2 unitary applied jointly to (Ex, Ey), drawn from
// (seed, roundtrip_index) so reruns land on the same sphere point.
DualPolWaveform scramble_polarization(const DualPolWaveform& field, std::uint64_t seed,
                                      int roundtrip_index);

// Rescale each channel band to the comb's mean per-channel power. Ideal
// stand-in for the loop's physical equalizer.
DualPolWaveform equalize_comb(const DualPolWaveform& field, const WdmConfig& cfg);

struct LoopTelemetry {
    int loop_index = 0;       // 1-based round trip count
    double distance_km = 0.0;
    double power_dbm = 0.0;   // total comb power after the round trip
    double osnr_db = 0.0;     // analytic CUT OSNR in 12.5 GHz, both pols
    bool guard_ok = true;
};

std::string loop_telemetry_csv_header();
std::string loop_telemetry_csv_row(const LoopTelemetry& t);

struct LoopRunResult {
    DualPolWaveform field;
    std::vector<LoopTelemetry> telemetry;  // one row per round trip
};

// n_roundtrips full round trips; n = 0 returns the field untouched.
LoopRunResult run_loop(const DualPolWaveform& field, const LoopConfig& cfg,
                       int n_roundtrips);

}  // namespace slicewave
