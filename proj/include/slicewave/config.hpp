#pragma once

#include "slicewave/channel.hpp"
#include "slicewave/dsp.hpp"
#include "slicewave/metrics.hpp"
#include "slicewave/slicer.hpp"

#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <variant>
#include <vector>

namespace slicewave {

// Flat view of a TOML subset: [section.sub] headers plus key = value lines
// with strings, numbers, booleans, and one-line arrays. Dotted keys index
// the map directly ("channel.fiber.length_km").
using TomlValue =
    std::variant<bool, double, std::string, std::vector<double>, std::vector<std::string>>;

struct TomlTable {
    std::map<std::string, TomlValue> values;

    bool has(const std::string& key) const;
    double number(const std::string& key, double fallback) const;
    std::int64_t integer(const std::string& key, std::int64_t fallback) const;
    bool boolean(const std::string& key, bool fallback) const;
    std::string str(const std::string& key, const std::string& fallback) const;
    std::vector<double> numbers(const std::string& key) const;
};

// Throws std::runtime_error with a line number on malformed input.
TomlTable parse_toml(const std::string& text);
TomlTable parse_toml_file(const std::string& path);

// In-place "key=value" override, parsed with the same value grammar.
void apply_override(TomlTable& t, const std::string& assignment);

enum class Scenario { b2b_sweep, transmission_sweep, stitch_test, calibrate_tx };

Scenario scenario_from_string(const std::string& s);
std::string to_string(Scenario s);

// Everything a run needs. Simulation runs at desk scale; the rate formulas
// always use the full-scale symbol rate and channel spacing so reported
// bit rates stay comparable across scales.
struct ExperimentConfig {
    Scenario scenario = Scenario::b2b_sweep;

    ConstellationKind modulation = ConstellationKind::qam16;
    bool shaped = true;          // qpsk runs uniform regardless
    double entropy = 3.8;        // target H in bits for shaped sources

    double symbol_rate = 12.5e9;
    double pilot_rate = 0.0205;
    std::size_t frame_symbols = 16384;
    int shaping_sps = 4;
    double rolloff = 0.05;

    double formula_symbol_rate = 300e9;
    double formula_channel_spacing = 306.25e9;

    // Two-slice synthesis geometry, tones symmetric about the carrier.
    double slice_fsr = 6e9;
    double overlap_width = 1e9 / 3.0;

    TxImpairment tx;
    double pdme_delay = 84e-9;
    double sce_initial_phase = 1.0;  // injected error the lock removes
    double sce_gain = 0.5;

    double rx_bandwidth = 4e9;
    double lo_offset = 2e6;  // common LO error; snapped to the record grid
    double rx_snr_db = std::numeric_limits<double>::infinity();

    LoopConfig channel;

    int mimo_taps = 21;
    double mimo_step = 2e-3;
    int wl_taps = 7;
    int wl_passes = 8;
    CprInterp cpr_interp = CprInterp::linear;
    int cpr_avg_pilots = 1;  // pilot phasors averaged per carrier phase node

    FecFamily fec;

    std::uint64_t seed = 1;
    std::vector<double> osnr_list;   // b2b_sweep axis
    std::vector<int> loop_counts;    // transmission_sweep axis
    double calibrate_target_db = 15.0;

    double carrier_freq() const { return kSpeedOfLight / 1550e-9; }
    void validate() const;
};

// Desk-scale defaults shared by every scenario; sweep axes left empty.
ExperimentConfig default_config();

ExperimentConfig config_from_toml(const TomlTable& t);

// Stable key = value rendering of every field, the hashing preimage.
std::string canonical_config(const ExperimentConfig& c);

// FNV-1a 64 over the canonical rendering, 16 hex digits.
std::string config_hash(const ExperimentConfig& c);

}  // namespace slicewave
