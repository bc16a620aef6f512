#pragma once

#include "slicewave/shaping.hpp"
#include "slicewave/sigcore.hpp"

#include <optional>
#include <string>

namespace slicewave {

// 0.1 nm optical measurement bandwidth at 1550 nm.
constexpr double kOsnrRefBandwidth = 12.5e9;
constexpr double kSnrCapDb = 60.0;

// Error-free decoding needs ngmi >= threshold[i] to run rate rates[i].
struct FecFamily {
    std::vector<double> rates;       // strictly increasing, within [0.5, 0.9]
    std::vector<double> thresholds;  // strictly increasing alongside rates
    void validate() const;
};

// Rates 0.50..0.90 in 0.05 steps plus 0.74 and 0.85; threshold = rate + 0.02.
FecFamily default_fec_family();

std::optional<double> select_fec_rate(double ngmi_val, const FecFamily& family);

// Signal power over residual error power after the optimal complex scaling of
// rx onto tx, capped at 60 dB. The dual-pol form scales each polarization
// independently and pools the powers.
double estimate_snr_db(const CVec& rx, const CVec& tx);
double estimate_snr_db(const CVec& rx_x, const CVec& rx_y, const CVec& tx_x, const CVec& tx_y);

// Add white noise so total signal power over noise power in 12.5 GHz equals
// the target. Infinite target returns the field unchanged.
DualPolWaveform load_noise_to_osnr(const DualPolWaveform& field, double target_osnr_db,
                                   std::uint64_t seed);

// Bit-metric mutual information with the shaped prior, one polarization.
// Auxiliary channel is circular Gaussian with variance fitted to the data;
// result clamped to [0, H]. Needs at least 10^4 symbols.
double gmi(const CVec& rx, const std::vector<std::uint32_t>& tx_indices,
           const ShapingDistribution& d);

// ngmi = 1 - (H - gmi)/m
double ngmi(double gmi_val, double entropy, int cardinality_bits);

// 2 R (1 - Rp) (H - (1 - rc) m), zero when the code cannot support the shaping.
double net_bit_rate(double symbol_rate, double pilot_rate, double entropy, double code_rate,
                    int cardinality_bits);

// Same formula with the code rate replaced by NGMI.
double air(double symbol_rate, double pilot_rate, double entropy, double ngmi_val,
           int cardinality_bits);

double spectral_efficiency(double net_rate_bps, double channel_spacing_hz);

struct RateReport {
    double distance_km = 0.0;
    double snr_db = 0.0;
    double gmi = 0.0;
    double ngmi = 0.0;
    double air_bps = 0.0;
    std::optional<double> selected_rc;
    double net_bps = 0.0;
    double se_bps_hz = 0.0;
    double symbol_rate = 0.0;
    double pilot_rate = 0.0;
    double entropy = 0.0;
    int cardinality_bits = 0;
    double osnr_db = 0.0;  // meaningful only on noise-loading sweeps
};

std::string rate_report_csv_header();
std::string rate_report_csv_row(const RateReport& r);

}  // namespace slicewave
