#pragma once

#include "slicewave/shaping.hpp"
#include "slicewave/sigcore.hpp"

#include <array>
#include <limits>

namespace slicewave {

// Two-slice spectral synthesis geometry. Slice carriers sit at tone_freqs;
// the crossover between slices is the midpoint, with a raised-cosine
// transition of transition() width inside an overlap_width band shared by
// both slices for phase estimation.
struct SliceSpec {
    std::array<double, 2> tone_freqs{0.0, 0.0};  // absolute Hz, ascending
    double overlap_width = 0.0;                  // Hz
    double transition_width = 0.0;               // Hz; 0 means overlap_width
    double rolloff = 0.05;
    double symbol_rate = 0.0;                    // Baud

    double fsr() const { return tone_freqs[1] - tone_freqs[0]; }
    double crossover() const { return 0.5 * (tone_freqs[0] + tone_freqs[1]); }
    double transition() const { return transition_width > 0.0 ? transition_width : overlap_width; }
    void validate() const;
};

// Raised-cosine step from 0 to 1 across [center - width/2, center + width/2].
double crossover_step(double f, double center, double width);

// Root-raised-cosine magnitude shared by the shaper and the matched filter.
double rrc_amplitude(double f, double symbol_rate, double rolloff);

// RRC pulse shaping on a cyclic grid: symbol k lands at sample k*sps, the
// matched-filter chain returns symbols at unit gain, and expected mean power
// is 1. Sample count must come out a power of two.
ComplexWaveform shape_pulse(const CVec& symbols, const SliceSpec& spec, int sps);
ComplexWaveform shape_pulse(const PilotFrame& frame, const SliceSpec& spec, int sps);

// Matched RRC filter and symbol-spaced pickup (the receive half of the
// shape_pulse convention).
CVec matched_filter_symbols(const ComplexWaveform& w, double symbol_rate, double rolloff);

// Split into two complementary slices, each re-centered on its tone.
std::array<ComplexWaveform, 2> slice(const ComplexWaveform& w, const SliceSpec& spec);

// Coherent sum of two slices on the common center grid, with an optional
// extra phase on slice 2. Exact inverse of slice() when the phase is zero.
ComplexWaveform recombine(const ComplexWaveform& s1, const ComplexWaveform& s2,
                          const SliceSpec& spec, double phase_on_s2 = 0.0);

struct SceState {
    double phase_error = 0.0;   // controller phase applied to slice 2
    double error_signal = 0.0;  // last U_err
    double loop_gain = 0.5;
    bool locked = false;
    double tolerance = 1e-3;    // radians
    int iterations = 0;
    int dither_kicks = 0;       // escapes from the unstable pi equilibrium
    std::vector<double> trace;  // controller phase per iteration, [0] = start
};

// Interference discriminant over the shared overlap band: with C the overlap
// correlation sum(S2 S1*), U = Im(C e^{j phase}) / |C|, an exact sine in the
// total phase.
double sce_error(const ComplexWaveform& s1, const ComplexWaveform& s2, const SliceSpec& spec,
                 double injected_phase);

struct SceResult {
    ComplexWaveform s1, s2;  // s2 rotated by the final controller phase
    SceState state;
};

// Iterate phase <- phase - loop_gain * U_err until |U_err| < tolerance, with
// a dither test so the anti-lock point at pi is kicked instead of reported
// as locked. Throws if max_iters pass without lock.
SceResult sce_lock(const ComplexWaveform& s1, const ComplexWaveform& s2, const SliceSpec& spec,
                   SceState state, int max_iters = 10000);

struct TxImpairment {
    double bandwidth_3db = std::numeric_limits<double>::infinity();  // Hz per slice
    double iq_gain_imbalance_db = 0.0;
    double iq_phase_imbalance_deg = 0.0;
    double iq_skew = 0.0;                                            // s
    double floor_snr_db = std::numeric_limits<double>::infinity();
    void validate() const;
};

// Second-order Butterworth-like magnitude low-pass, static IQ imbalance and
// skew, then white noise sized so a matched-filter loopback at symbol_rate
// reads floor_snr_db.
ComplexWaveform apply_tx_impairments(const ComplexWaveform& w, const TxImpairment& imp,
                                     double symbol_rate, std::uint64_t seed);

struct PdmeConfig {
    double delay = 0.0;  // s; split ratio is fixed 1:1
};

// Split-and-delay polarization multiplexing emulation: x is the input, y a
// circularly delayed copy (delay rounded to the sample grid).
DualPolWaveform pdme(const ComplexWaveform& w, const PdmeConfig& cfg);

struct SliceRecord {
    ComplexWaveform wave;          // center_freq = lo_freq
    double lo_freq = 0.0;          // Hz
    double bandwidth = 0.0;        // Hz
    std::uint64_t seed = 0;
    double injected_offset = 0.0;  // per-slice unknown phase, for harnesses
};

// Coherent two-slice capture: downconvert by each LO, low-pass flat to
// rx_bandwidth with a raised-cosine edge beyond it, rotate by a per-slice
// unknown phase, and optionally add white receiver noise. Result indexed
// [slice][pol]. Requires rx_bandwidth > fsr/2 + overlap/2 so both slices
// capture the whole overlap band.
std::array<std::array<SliceRecord, 2>, 2> rx_slice_detect(
    const DualPolWaveform& field, std::array<double, 2> lo_freqs, double rx_bandwidth,
    const SliceSpec& spec, std::uint64_t seed,
    double rx_snr_db = std::numeric_limits<double>::infinity());

// arg of the overlap correlation sum(S2 S1*): the phase to remove from slice
// 2 so both records agree in the overlap. Range (-pi, pi].
double estimate_phase_offset(const SliceRecord& s1, const SliceRecord& s2,
                             const SliceSpec& spec);
// Dual-pol variant pooling the correlation across polarizations.
double estimate_phase_offset(const std::array<std::array<SliceRecord, 2>, 2>& records,
                             const SliceSpec& spec);

// Rotate slice 2 by -phase, frequency-align both records, and blend through
// the complementary crossover onto the full-band grid centered between LOs.
ComplexWaveform stitch(const SliceRecord& s1, const SliceRecord& s2, double phase,
                       const SliceSpec& spec);

// Waveform dump plus a JSON sidecar (lo_freq, bandwidth, seed, injected
// offset) at path_base + ".bin" / ".json".
void write_slice_record(const SliceRecord& r, const std::string& path_base);
SliceRecord read_slice_record(const std::string& path_base);

}  // namespace slicewave
